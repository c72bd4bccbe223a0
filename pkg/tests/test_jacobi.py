import math

import numpy as np
import pytest

from gasgiant.flow import apex_start
from gasgiant.jacobi import (conjugate_point_scan, covariant_derivative, jacobi_direct,
                             jacobi_solve, simplicity_certificate)
from gasgiant.metric import GasGiantMetric, metric_from_dict, round_sphere


def test_sphere_conjugate_time():
    scan = conjugate_point_scan(round_sphere(), [math.pi / 2, 0.0], [0.0, 1.0], 4.0)
    assert len(scan.times) == 1
    assert scan.times[0] == pytest.approx(math.pi, abs=1e-6)


def test_zero_data_stays_zero(model):
    z = np.array([0.3, 0.0])
    p = model.unit_covector(z, [0.6, 0.8])
    sol = jacobi_solve(model, z, p, np.zeros(2), np.zeros(2), 1.0)
    assert np.all(sol.J == 0) and np.all(sol.Jdot == 0)


def test_flat_limit_affine():
    g = GasGiantMetric(1e-3, 2, x_max=4.0)
    z = np.array([2.0, 0.0])
    p = g.unit_covector(z, [0.6, 0.8])
    J0, Jd0 = np.array([0.3, -0.2]), np.array([0.5, 1.0])
    sol = jacobi_solve(g, z, p, J0, Jd0, 1.0)
    affine = J0[None, :] + sol.t[:, None] * Jd0[None, :]
    assert np.max(np.abs(sol.J[:, :, 0] - affine)) < 1e-3


def test_rescaled_system_matches_direct(model):
    z = np.array([0.4, 0.0])
    p = model.unit_covector(z, [0.2, 1.0])
    J0, Jd0 = np.array([0.0, 0.0]), np.array([0.3, -0.1])
    sol = jacobi_solve(model, z, p, J0, Jd0, 0.5, rtol=1e-12, atol=1e-14)
    t, J, _ = jacobi_direct(model, z, p, J0, Jd0, 0.5, rtol=1e-12, atol=1e-14)
    assert np.allclose(sol.J[-1, :, 0], J[-1, :, 0], atol=1e-8)


def test_vertical_ray_growth_bounds(model):
    z = np.array([0.5, 0.0])
    p = model.unit_covector(z, [-1.0, 0.0])
    # Gronwall on a segment that stops short of the boundary: |W(t)| <= |W(0)| exp(int |A|)
    seg = jacobi_solve(model, z, p, [0.0, 1.0], [0.0, 0.0], 10.0, stop_x=1e-2)
    W = np.concatenate([seg.J[:, :, 0], seg.W2[:, :, 0]], axis=1)
    normW = np.linalg.norm(W, axis=1)
    assert np.all(np.log(normW / normW[0]) <= seg.log_gronwall + 1e-9)
    # all the way down, the tangential field stays bounded in the Euclidean frame
    sol = jacobi_solve(model, z, p, [0.0, 1.0], [0.0, 0.0], 10.0, stop_x=1e-6)
    assert sol.z[-1, 0] == pytest.approx(1e-6, rel=1e-6)
    assert np.max(np.linalg.norm(sol.J[:, :, 0], axis=1)) <= 2.0
    # and |D_t J|_e x stays bounded over the last two decades of x
    DJ = np.array([covariant_derivative(model, zz, vv, JJ, Jd)[:, 0]
                   for zz, vv, JJ, Jd in zip(sol.z, sol.v, sol.J, sol.Jdot)])
    x = sol.z[:, 0]
    tail = x < 1e-4
    prod = np.linalg.norm(DJ[tail], axis=1) * x[tail]
    assert prod.max() <= 2.0 * prod[0]


def test_model_cycloids_have_no_conjugate_points(model):
    for x0 in (0.1, 0.5):
        start = apex_start(model, x0)
        scan = conjugate_point_scan(model, start[:2], start[2:], 10.0, stop_x=1e-3 * x0)
        assert scan.times == []


def test_model_is_simple(model):
    rep = simplicity_certificate(model, n_heights=4, n_angles=8)
    assert rep.passed
    assert rep.conjugate_points == 0 and rep.non_exiting == 0
    assert rep.max_gronwall_ratio <= 1.0 + 1e-8
    assert rep.orbits == 32


def test_trapping_metric_fails_with_witness():
    # x^-1 (1 + 50 x^3) has a minimum near x = 0.215: nearly horizontal orbits there are trapped
    g = metric_from_dict({"alpha": 1.0, "dim": 2, "family": {
        "kind": "flat", "params": {"coefficients": [1, 0, 0, 50]}}})
    rep = simplicity_certificate(g, n_heights=2, n_angles=4, x_range=(0.15, 0.3), t_max=40.0)
    assert not rep.passed
    assert rep.non_exiting > 0
    assert "non_exiting" in rep.witness
