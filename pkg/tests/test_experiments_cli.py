import json
import math
import os

import jsonschema
import numpy as np
import pytest

from gasgiant.cli import main
from gasgiant.errors import ConfigError
from gasgiant.experiments import (ExperimentConfig, gnuplot_columns, load_config, run_batch,
                                  run_experiment)

SCHEMA = json.load(open(os.path.join(os.path.dirname(__file__), "..", "docs",
                                     "summary.schema.json")))
MODEL = {"alpha": 1.0, "dim": 2, "x_max": 1.0, "family": {"kind": "flat"}}


def _cfg(tmp_path, kind, name, **kw):
    data = {"kind": kind, "name": name, "metric": MODEL, "output": {"dir": str(tmp_path)}}
    data.update(kw)
    return ExperimentConfig.from_dict(data, str(tmp_path))


def test_exit_time_summary(tmp_path):
    res = run_experiment(_cfg(tmp_path, "exit_time", "exit"))
    summary = json.load(open(res.summary_path))
    jsonschema.validate(summary, SCHEMA)
    assert summary["pass"] is True
    assert summary["expected_values"]["slope"] == 0.5
    assert summary["fitted_values"]["slope"] == pytest.approx(0.5, abs=0.01)
    assert open(res.log_path).read().strip().endswith("PASS")


def test_empty_ladder_rejected_before_compute(tmp_path):
    with pytest.raises(ConfigError):
        _cfg(tmp_path, "exit_time", "e", params={"x0_ladder": []})
    assert not list(tmp_path.iterdir())


def test_unknown_kind_and_missing_metric(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "teleport"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "exit_time", "metric": "absent.json"}, str(tmp_path))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "exit_time", "metric": {"alpha": 3, "dim": 2}})


def _xray_cfg(tmp_path, name):
    return _cfg(tmp_path, "xray_injectivity", name, seed=5,
                params={"nx": 2, "ny": 2, "catalog_shape": [4, 2], "resamples": 2})


def test_seeded_csv_is_byte_identical(tmp_path):
    a = run_experiment(_xray_cfg(tmp_path / "a", "x"))
    b = run_experiment(_xray_cfg(tmp_path / "b", "x"))
    assert open(a.csv_path, "rb").read() == open(b.csv_path, "rb").read()


def test_seed_environment_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GEO_SEED", "11")
    assert _xray_cfg(tmp_path, "x").seed == 11


def test_module_error_is_captured(tmp_path):
    cfg = _cfg(tmp_path, "hausdorff", "h3", metric={"alpha": 1.0, "dim": 3})
    results, code = run_batch([cfg])
    summary = json.load(open(results[0].summary_path))
    jsonschema.validate(summary, SCHEMA)
    assert code == 2 and summary["pass"] is False
    assert summary["error_type"] == "NotImplementedError"


def test_batch_concurrency_and_gnuplot(tmp_path):
    cfgs = [_cfg(tmp_path, "exit_time", "a"), _cfg(tmp_path, "lane_emden_profile", "b"),
            _cfg(tmp_path, "scattering", "c")]
    results, code = run_batch(cfgs, jobs=3)
    assert code == 0 and [r.name for r in results] == ["a", "b", "c"]
    for r in results:
        jsonschema.validate(json.load(open(r.summary_path)), SCHEMA)
    gnuplot_columns(results[0].csv_path, tmp_path / "a.dat")
    lines = open(tmp_path / "a.dat").read().splitlines()
    assert lines[0] == "# x0 exit_time" and len(lines[1].split()) == 2


def test_expansion_experiment_reports_both_constants(tmp_path):
    res = run_experiment(_cfg(tmp_path, "expansion_constants", "exp"))
    s = json.load(open(res.summary_path))
    assert s["fitted_values"]["c_x"] == pytest.approx(0.25, rel=1e-6)
    assert s["fitted_values"]["c_y"] == pytest.approx(s["expected_values"]["c_y_derived"], rel=1e-6)
    assert s["expected_values"]["c_y_stated"] == 0.125


def _write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_cli_run_exit_codes(tmp_path, capsys):
    m = _write(tmp_path / "m.json", MODEL)
    good = _write(tmp_path / "good.json", {"experiments": [
        {"kind": "exit_time", "name": "e", "metric": m, "output": {"dir": "out"}}]})
    assert main(["run", "--config", good]) == 0
    assert "PASS e" in capsys.readouterr().out
    bad = _write(tmp_path / "bad.json", {"kind": "exit_time", "metric": m,
                                         "params": {"x0_ladder": []}})
    assert main(["run", "--config", bad]) == 3
    failing = _write(tmp_path / "fail.json", {
        "kind": "exit_time", "name": "f", "metric": m, "params": {"prefactor": 3.0}})
    assert main(["run", "--config", failing]) == 2


def test_cli_trace_footer(tmp_path):
    m = _write(tmp_path / "m.json", MODEL)
    out = tmp_path / "traj.csv"
    assert main(["trace", "--metric", m, "--x0", "0.5", "--eta", "1.0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x,y0,xi,eta0,H"
    footer = json.loads(lines[-1][len("# exit "):])
    assert footer["status"] == "exited"
    assert footer["time"] == pytest.approx(math.pi, abs=1e-6)
    data = np.loadtxt(out, delimiter=",", skiprows=1, comments="#")
    assert np.allclose(data[data[:, 1] > 0, 5], 0.25, atol=1e-8)


def test_cli_distance(tmp_path):
    m = _write(tmp_path / "m.json", dict(MODEL, x_max=4.0))
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("y1,y2\n0,1\n0,0\n")
    out = tmp_path / "d.csv"
    assert main(["distance", "--metric", m, "--pairs", str(pairs), "--out", str(out)]) == 1
    rows = out.read_text().splitlines()
    assert float(rows[1].split(",")[2]) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-5)
    assert rows[2].endswith("FlowError")


def test_cli_xray_and_pestov(tmp_path):
    m = _write(tmp_path / "m.json", dict(MODEL, x_max=4.0))
    f = _write(tmp_path / "f.json", {"kind": "poly", "params": {"coefficients": [1.0]}})
    rays = tmp_path / "rays.csv"
    rays.write_text("y,eta\n0,1\n")
    out = tmp_path / "I.csv"
    assert main(["xray", "--metric", m, "--field", f, "--rays", str(rays), "--out", str(out)]) == 0
    assert float(out.read_text().splitlines()[1].split(",")[2]) == pytest.approx(2 * math.pi)
    rep = tmp_path / "p.json"
    assert main(["pestov", "--metric", m, "--eps", "0.1", "--grid", "24", "--x-top", "1.0",
                 "--out", str(rep)]) == 0
    assert abs(json.load(open(rep))["terms"]["residual"]) < 1e-2
    assert main(["pestov", "--metric", m, "--eps", "2.0", "--x-top", "1.0",
                 "--out", str(rep)]) == 3


def test_cli_spectrum_and_jacobi(tmp_path):
    out = tmp_path / "eig.csv"
    assert main(["spectrum", "--alpha", "1", "--dim", "2", "--eps-ladder", "4:6", "--k", "2",
                 "--N", "300", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "alpha,n,mu,eps,j,lambda,grid_N,sym_residual" and len(rows) == 7
    m = _write(tmp_path / "m.json", MODEL)
    rep = tmp_path / "j.json"
    assert main(["jacobi", "--metric", m, "--x0", "0.2", "--angles", "4",
                 "--report", str(rep)]) == 0
    assert json.load(open(rep))["conjugate_points"] == 0


def test_load_config_file(tmp_path):
    _write(tmp_path / "m.json", MODEL)
    path = _write(tmp_path / "c.json", {"experiments": [
        {"kind": "lane_emden_profile"}, {"kind": "exit_time", "metric": "m.json"}]})
    cfgs = load_config(path)
    assert [c.kind for c in cfgs] == ["lane_emden_profile", "exit_time"]
    assert cfgs[1].metric["alpha"] == 1.0
