"""The ``geo`` command line: tracing, distances, Jacobi reports, X-rays, Pestov terms, spectra."""

import argparse
import csv
from dataclasses import asdict
import json
import sys

import numpy as np

from .errors import ConfigError, GasGiantError, MetricError

EXIT_OK, EXIT_MODULE, EXIT_CONFIG = 0, 1, 3


def _floats(text):
    return [float(v) for v in str(text).split(",")]


def _metric(path):
    from .metric import load_metric
    try:
        return load_metric(path)
    except OSError as exc:
        raise ConfigError(f"cannot read metric {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"metric {path} is not valid JSON: {exc}") from exc


def _fmt(v):
    return format(float(v), ".17g")


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(type(v).__name__)


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def cmd_trace(args):
    from .flow import integrate_to_boundary, pack
    g = _metric(args.metric)
    m = g.m
    y0 = g.y_box.mean(axis=1) if args.y0 is None else np.array(_floats(args.y0))
    eta = np.array(_floats(args.eta))
    if y0.size != m or eta.size != m:
        raise ConfigError(f"--y0 and --eta need {m} entries")
    tr = integrate_to_boundary(g, pack(args.x0, y0, args.xi, eta), t_max=args.t_max)
    cols = ["t", "x"] + [f"y{k}" for k in range(m)] + ["xi"] + [f"eta{k}" for k in range(m)] + ["H"]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in tr.table():
            w.writerow([_fmt(v) for v in row])
        fh.write("# exit " + json.dumps(tr.exit.as_dict(), default=_json_default) + "\n")
    return EXIT_OK if tr.exit.status == "exited" else EXIT_MODULE


def cmd_distance(args):
    from .flow import connect_boundary_points
    g = _metric(args.metric)
    m = g.m
    try:
        pairs = np.loadtxt(args.pairs, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read pairs {args.pairs}: {exc}") from exc
    if pairs.shape[1] != 2 * m:
        raise ConfigError(f"pairs file needs {2 * m} columns (y1..., y2...)")
    code = EXIT_OK
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y1_{k}" for k in range(m)] + [f"y2_{k}" for k in range(m)] +
                   ["distance", "status"])
        for row in pairs:
            try:
                d, status = connect_boundary_points(g, row[:m], row[m:]).length, "ok"
            except GasGiantError as exc:
                d, status, code = float("nan"), type(exc).__name__, EXIT_MODULE
            w.writerow([_fmt(v) for v in row] + [_fmt(d), status])
    return code


def cmd_jacobi(args):
    from .jacobi import simplicity_certificate
    g = _metric(args.metric)
    x0 = sorted(_floats(args.x0))
    rep = simplicity_certificate(g, n_heights=len(x0) if len(x0) > 1 else 1,
                                 n_angles=args.angles, x_range=(x0[0], x0[-1]))
    _write_json(args.report, asdict(rep))
    return EXIT_OK if rep.passed else EXIT_MODULE


def cmd_xray(args):
    from .fields import load_field
    from .flow import scattering_relation
    from .xray import load_catalog
    g = _metric(args.metric)
    try:
        f = load_field(args.field)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read field {args.field}: {exc}") from exc
    f.check_vanishing()
    code = EXIT_OK
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "eta", "I", "length", "status"])
        for y, eta in load_catalog(args.rays):
            sc = scattering_relation(g, [y], [eta], integrand=f)
            if sc.status != "exited":
                code = EXIT_MODULE
                w.writerow([_fmt(y), _fmt(eta), "nan", "nan", sc.status])
                continue
            w.writerow([_fmt(y), _fmt(eta), _fmt(np.atleast_1d(sc.integral)[0]),
                        _fmt(sc.length), sc.status])
    return code


def cmd_pestov(args):
    from .pestov import (BundleGeometry, bundle_grid, compact_test_function, pestov_terms,
                         sample_field, uf_face_boundary_term)
    g = _metric(args.metric)
    if g.dim != 2:
        raise ConfigError("the Pestov balance is discretized for dimension 2")
    x_top = args.x_top if args.x_top is not None else g.x_max
    if not 0 < args.eps < x_top:
        raise ConfigError("need 0 < eps < x_top")
    x, y, th = bundle_grid((args.eps, x_top), args.grid, args.grid, args.grid)
    u = compact_test_function((args.eps, x_top))
    terms = pestov_terms(g, sample_field(u, x, y, th), BundleGeometry(g, x, y))
    report = {"eps": args.eps, "grid": args.grid, "x_top": x_top, "terms": terms}
    if args.field:
        from .fields import load_field
        face = uf_face_boundary_term(g, load_field(args.field), args.eps)
        report["uf_boundary_term"] = asdict(face)
    _write_json(args.out, report)
    return EXIT_OK


def _ladder(text):
    if ":" in text:
        a, b = (int(v) for v in text.split(":"))
        return 2.0 ** -np.arange(a, b + 1)
    return np.array(_floats(text))


def cmd_spectrum(args):
    from .spectral import eigen_table
    if args.k < 1 or args.N < 8:
        raise ConfigError("need k >= 1 and N >= 8")
    tab = eigen_table(args.alpha, args.dim, args.mode_mu, _ladder(args.eps_ladder), args.k, args.N)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "n", "mu", "eps", "j", "lambda", "grid_N", "sym_residual"])
        for row in tab.rows():
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return EXIT_OK


def cmd_run(args):
    from .experiments import load_config, run_batch
    results, code = run_batch(load_config(args.config), jobs=args.jobs)
    for r in results:
        tag = "PASS" if r.passed else ("ERROR" if r.error else "FAIL")
        print(f"{tag} {r.name} ({r.kind})" + (f": {r.error}" if r.error else ""))
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="geo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("trace", help="integrate one geodesic to the boundary")
    s.add_argument("--metric", required=True)
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("--y0", help="comma-separated boundary coordinates (default: box center)")
    s.add_argument("--xi", type=float, default=0.0)
    s.add_argument("--eta", required=True, help="comma-separated tangential covector")
    s.add_argument("--t-max", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("distance", help="boundary-to-boundary distances")
    s.add_argument("--metric", required=True)
    s.add_argument("--pairs", required=True, help="CSV with header; columns y1..., y2...")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("jacobi", help="conjugate-point scan and simplicity report")
    s.add_argument("--metric", required=True)
    s.add_argument("--x0", required=True, help="comma-separated start heights")
    s.add_argument("--angles", type=int, default=16)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_jacobi)

    s = sub.add_parser("xray", help="X-ray transform of a field along a ray catalog")
    s.add_argument("--metric", required=True)
    s.add_argument("--field", required=True)
    s.add_argument("--rays", required=True, help="CSV with header y,eta")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_xray)

    s = sub.add_parser("pestov", help="Pestov identity terms on the truncated bundle")
    s.add_argument("--metric", required=True)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--grid", type=int, default=128)
    s.add_argument("--x-top", type=float)
    s.add_argument("--field", help="also report B_eps(u^f) for this field")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pestov)

    s = sub.add_parser("spectrum", help="truncated Dirichlet eigenvalues of a radial mode")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--mode-mu", type=float, default=0.0)
    s.add_argument("--eps-ladder", default="4:14", help="a:b for 2^-a..2^-b, or a comma list")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--N", type=int, default=2000)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("run", help="run experiments from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MetricError) as exc:
        print(f"geo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GasGiantError as exc:
        print(f"geo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODULE


if __name__ == "__main__":
    sys.exit(main())
