"""The fourteen acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line (repeated in the terminal summary)
and then asserts the same condition.
"""

from fractions import Fraction
import math
import time

import numpy as np

from gasgiant.curvature import curvature_distance_law, sectional_curvature, volume_growth
from gasgiant.fields import bump_field
from gasgiant.flow import (apex_start, boundary_distance_scaling, connect_boundary_points,
                           exit_time_scaling, expansion_fit, hausdorff_dimension,
                           integrate_to_boundary)
from gasgiant.metric import GasGiantMetric
from gasgiant.normal_form import lane_emden, profile_exponent
from gasgiant.pestov import (BundleGeometry, boundary_term_trend, bundle_grid,
                             compact_test_function, pestov_terms, sample_field)
from gasgiant.spectral import bessel_oracle, eigen_table, indicial_data, truncation_rate_fit
from gasgiant.xray import (TensorBSplineBasis, bundle_nodes, discrete_injectivity_probe,
                           ray_catalog, transport_residual)


def test_c01_cycloid_oracle(criterion):
    start = time.perf_counter()
    g = GasGiantMetric(1.0, 2, x_max=4.0)
    worst = 0.0
    for x0 in (0.05, 0.2, 0.5, 0.9):
        R = x0 / 2
        tr = integrate_to_boundary(g, apex_start(g, x0, [0.0]))
        phi = 2 * math.pi - np.arccos(np.clip(1 - tr.x / R, -1, 1))
        worst = max(worst,
                    abs(tr.exit.y[0] - math.pi * R),                       # endpoint
                    abs(tr.exit.time - math.pi * math.sqrt(x0)),           # exit time
                    np.max(np.abs(tr.y[:, 0] - R * (phi - np.sin(phi) - math.pi))))
    rel = max(abs(connect_boundary_points(g, [0.0], [dy]).length / (2 * math.sqrt(math.pi * dy)) - 1)
              for dy in (0.01, 0.1, 1.0, math.pi))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and rel < 1e-5 and elapsed < 10
    criterion(1, ok, f"path/exit error {worst:.1e}, distance rel error {rel:.1e}, {elapsed:.1f}s")
    assert ok


def test_c02_asymptotic_constants(criterion):
    rows, ok = [], True
    for a in (0.5, 1.0, 1.5):
        g = GasGiantMetric(a, 2)
        fit = expansion_fit(g, integrate_to_boundary(g, apex_start(g, 0.05), record=False))
        ex = fit.expected
        e_cx = abs(fit.c_x / ex["c_x"] - 1)
        e_cy = abs(fit.c_y / ex["c_y_stated"] - 1)
        e_x = abs(fit.exponent_x - ex["exponent_x"])
        e_y = abs(fit.exponent_y - ex["exponent_y"])
        ok &= e_cx <= 0.01 and e_cy <= 0.02 and e_x <= 0.01 and e_y <= 0.01
        rows.append(f"a={a}: c {e_cx:.1e}, c' {fit.c_y:.4f} vs {ex['c_y_stated']:.4f} "
                    f"(derived {ex['c_y']:.4f}), exps {max(e_x, e_y):.1e}")
    criterion(2, ok, "; ".join(rows))
    assert ok


def test_c03_exit_time_law(criterion):
    rows, ok = [], True
    for a in (0.5, 1.0, 1.5):
        _, _, fit = exit_time_scaling(GasGiantMetric(a, 2))
        ok &= abs(fit.exponent - (1 - a / 2)) <= 0.01
        rows.append(f"a={a}: slope {fit.exponent:.5f}")
        if a == 1.0:
            ok &= abs(fit.prefactor / math.pi - 1) <= 0.005
            rows.append(f"prefactor {fit.prefactor:.6f}")
    criterion(3, ok, ", ".join(rows))
    assert ok


def test_c04_curvature_laws(criterion):
    rows, ok = [], True
    for a in (0.5, 1.0, 1.5):
        law = curvature_distance_law(GasGiantMetric(a, 3), [[1e-4, 0.5, 0.5]])
        pairs = [(law.radial[0], law.expected[0]), (law.tangential[0], law.expected[1]),
                 (law.radial_distance[0], law.expected_distance[0]),
                 (law.tangential_distance[0], law.expected_distance[1])]
        err = max(abs(v / e - 1) for v, e in pairs)
        ok &= err <= 0.01
        rows.append(f"a={a}: {err:.1e}")
    model = GasGiantMetric(1.0, 2)
    exact = max(abs(sectional_curvature(model, [x, 0.0]) + 1 / (2 * x))
                for x in (0.5, 0.1, 1e-2, 1e-4) if True) / 1.0
    rel_exact = max(abs(sectional_curvature(model, [x, 0.0]) * 2 * x + 1)
                    for x in (0.5, 0.1, 1e-2, 1e-4))
    ok &= rel_exact <= 1e-9
    criterion(4, ok, "rel errors " + ", ".join(rows) +
              f"; model K=-1/(2x) rel {rel_exact:.1e} (abs {exact:.1e})")
    assert ok


def test_c05_boundary_comparability(criterion):
    rows, ok = [], True
    for a in (0.5, 1.0, 1.5):
        _, _, fit, a_rec = boundary_distance_scaling(GasGiantMetric(a, 2))
        ok &= abs(fit.exponent - (1 - a / 2)) <= 0.01 and abs(a_rec - a) <= 0.02
        rows.append(f"a={a}: slope {fit.exponent:.5f}, alpha {a_rec:.5f}")
    criterion(5, ok, ", ".join(rows))
    assert ok


def test_c06_hausdorff_dimension(criterion):
    rows, ok = [], True
    for a in (0.5, 1.0):
        est = hausdorff_dimension(GasGiantMetric(a, 2))
        ok &= abs(est.dimension / est.expected - 1) <= 0.05
        rows.append(f"(2,{a}): {est.dimension:.4f} vs {est.expected:.4f}")
    criterion(6, ok, ", ".join(rows))
    assert ok


def test_c07_volume_growth(criterion):
    power = volume_growth(GasGiantMetric(1.0, 3))
    logs = [volume_growth(GasGiantMetric(2.0 / n, n)) for n in (2, 3)]
    ok = (power.regime == "power" and abs(power.exponent - (-0.5)) <= 0.02
          and all(v.regime == "log" and v.log_coefficient > 0 for v in logs))
    # in the log regime Vol / (-log eps) settles to a constant
    ratios = [v.volumes[-1] / -math.log(v.eps[-1]) / (v.volumes[-2] / -math.log(v.eps[-2]))
              for v in logs]
    ok &= all(abs(r - 1) < 0.05 for r in ratios)
    criterion(7, ok, f"(3,1) exponent {power.exponent:.4f}; log regime at a=2/n for n=2,3 "
              f"(ratio drift {max(abs(r - 1) for r in ratios):.1e})")
    assert ok


def test_c08_transport_equation(criterion):
    g = GasGiantMetric(1.0, 2, x_max=4.0)
    f = bump_field(4, 0.3, 0.25, 0.0, 0.6)
    nodes = bundle_nodes(g, [0.2, 0.35], [-0.1, 0.1], [0.5, 1.7, 2.6])
    small = transport_residual(g, f, nodes, 1e-4).sup
    sups = [transport_residual(g, f, nodes, h).sup for h in (0.05, 0.025, 0.0125)]
    ratios = [sups[0] / sups[1], sups[1] / sups[2]]
    ok = small < 1e-6 and all(3.5 <= r <= 4.5 for r in ratios)
    criterion(8, ok, f"residual {small:.1e} at h=1e-4, halving ratios "
              + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok


def test_c09_pestov_balance(criterion):
    start = time.perf_counter()
    g = GasGiantMetric(1.0, 2)
    x, y, th = bundle_grid((0.1, 1.0), 128, 128, 128)
    terms = pestov_terms(g, sample_field(compact_test_function((0.1, 1.0)), x, y, th),
                         BundleGeometry(g, x, y))
    # B_eps(u^f) for f = x^4 bump(x), on a collar tall enough to hold the whole chords
    trend = boundary_term_trend(GasGiantMetric(1.0, 2, x_max=4.0), bump_field(4, 0.0, 1.0),
                                (0.2, 0.1, 0.05))
    elapsed = time.perf_counter() - start
    balanced = abs(terms["residual"]) < 1e-3 and terms["t_boundary"] == 0.0
    ok = balanced and trend.decreasing and elapsed < 300
    criterion(9, ok, f"compact residual {terms['residual']:.1e}; B_eps(u^f) = "
              + ", ".join(f"{v:.4f}" for v in trend.values)
              + f" at eps 0.2, 0.1, 0.05 (|B| ~ eps^{trend.exponent:.2f}); {elapsed:.0f}s")
    assert ok


def test_c10_discrete_injectivity(criterion):
    g = GasGiantMetric(1.0, 2, x_max=4.0)
    basis = TensorBSplineBasis((0.1, 0.6), (-0.5, 0.5), 10, 10)
    reps = [discrete_injectivity_probe(g, basis, ray_catalog(g, 40, 20, np.random.default_rng(s)))
            for s in (1, 2, 3)]
    smin = np.array([r.sigma_min for r in reps])
    shape_ok = all(r.n_rays == 800 and r.n_basis == 100 for r in reps)
    ok = shape_ok and np.all(smin > 0) and np.all(np.abs(smin / smin[0] - 1) <= 0.2)
    criterion(10, ok, "sigma_min " + ", ".join(f"{s:.3e}" for s in smin)
              + f" (spread {smin.max() / smin.min() - 1:.1%}), rank "
              + ", ".join(str(r.rank) for r in reps))
    assert ok


def test_c11_spectral_oracle(criterion):
    tab = eigen_table(1.0, 2, 0.0, 2.0 ** -np.arange(4, 15), k=5)
    ref = bessel_oracle(5)
    e_limit = np.max(np.abs(tab.limit / ref - 1))
    e_rich = np.max(np.abs(tab.richardson / ref - 1))
    ok = e_limit <= 1e-3 and e_rich <= 1e-3
    criterion(11, ok, f"limit rel error {e_limit:.1e}, Richardson-from-ladder rel error "
              f"{e_rich:.1e}, lambda_1 = {tab.limit[0]:.6f}")
    assert ok


def test_c12_truncation_rate(criterion):
    # the rate is an eps -> 0 statement; eps = 2^-4 .. 2^-7 still carries visible
    # higher-order terms, so the fit ladder starts at 2^-8 (three decades to 2^-18)
    rows, ok = [], True
    for n, a in ((2, 1.0), (4, 1.0), (3, 0.5)):
        start = time.perf_counter()
        tab = eigen_table(a, n, 0.0, 2.0 ** -np.arange(8, 19), k=3)
        slopes = truncation_rate_fit(tab)
        elapsed = time.perf_counter() - start
        coarse = truncation_rate_fit(eigen_table(a, n, 0.0, 2.0 ** -np.arange(4, 15), k=3))
        gp = a * (n / 2 - 1) + 1
        ok &= bool(np.all(np.abs(slopes - gp) <= 0.1)) and elapsed < 180
        rows.append(f"(n={n},a={a}) expected {gp}: " + ", ".join(f"{s:.3f}" for s in slopes)
                    + f" [{elapsed:.0f}s; 2^-4..2^-14 ladder gives "
                    + ", ".join(f"{s:.3f}" for s in coarse) + "]")
    criterion(12, ok, "; ".join(rows))
    assert ok


def test_c13_indicial_formulas(criterion):
    alphas = [Fraction(1, 4), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2)]
    ns = [2, 3, 4, 6]
    bad = []
    for a in alphas:
        for n in ns:
            d = indicial_data(a, n)
            gp = a * n / 2 - a + 1
            lo = (a * n / 2 - 1) / 2
            checks = [d.exact["gamma_minus"] == 0, d.exact["gamma_plus"] == gp,
                      d.exact["gamma_plus"] ** 2 - gp * d.exact["gamma_plus"] == 0,
                      d.exact["mu_minus"] == lo, d.exact["mu_plus"] == lo + 2 - a,
                      d.essentially_self_adjoint == (a * n > 2),
                      d.exact["midpoint_roots"] == d.exact["midpoint_window"]]
            if not all(checks):
                bad.append((a, n))
    ok = not bad and len(alphas) * len(ns) == 20
    criterion(13, ok, f"{len(alphas) * len(ns)} (alpha, n) points, {len(bad)} mismatches")
    assert ok


def test_c14_lane_emden(criterion):
    le0, le1 = lane_emden(0.0), lane_emden(1.0)
    r0 = np.linspace(0, le0.radius, 2001)
    r1 = np.linspace(0, le1.radius, 2001)
    e0 = np.max(np.abs(le0.theta(r0) - (1 - r0 * r0 / 6)))
    e1 = np.max(np.abs(le1.theta(r1) - np.sinc(r1 / math.pi)))
    le = lane_emden(5.0 / 3.0)
    a_fit = profile_exponent(le.sound_speed_depth, le.radius)
    ok = e0 <= 1e-9 and e1 <= 1e-9 and abs(a_fit - 1) <= 0.01
    criterion(14, ok, f"sup errors {e0:.1e}, {e1:.1e}; alpha_fit {a_fit:.5f}")
    assert ok
