import math

import numpy as np
import pytest

from gasgiant.errors import ConfigError, MetricError
from gasgiant.fields import bump_field
from gasgiant.metric import GasGiantMetric, WarpedFamily
from gasgiant.pestov import (BundleGeometry, SphereBundleField, boundary_term, bundle_grid,
                             commutator_residuals, compact_test_function,
                             face_boundary_density, pestov_terms, sample_field,
                             uf_face_boundary_term)


def _terms(metric, u, N, eps=0.1, x_top=1.0):
    x, y, th = bundle_grid((eps, x_top), N, N, N)
    return pestov_terms(metric, sample_field(u, x, y, th))


def test_zero_function(model):
    terms = _terms(model, lambda X, Y, T: 0 * X, 16)
    assert all(v == 0 for v in terms.values())


def test_compact_balance_and_refinement(model):
    u = compact_test_function((0.1, 1.0))
    r32 = _terms(model, u, 32)
    r64 = _terms(model, u, 64)
    assert r64["t_boundary"] == 0.0
    assert abs(r64["residual"]) < 1e-4
    assert abs(r32["residual"]) / abs(r64["residual"]) > 4.0


def test_wrong_coefficient_is_detected(model):
    terms = _terms(model, compact_test_function((0.1, 1.0)), 32)
    assert abs(terms["residual_coefficient_dim"]) > 0.1


def test_balance_with_boundary_values():
    # u does not vanish on the faces and the metric is warped, so B(u) and K vary
    fam = WarpedFamily(lambda x: 1 + x * x, lambda x: 2 * x, lambda x: 2.0)
    g = GasGiantMetric(1.0, 2, fam, x_max=1.0)

    def u(X, Y, T):
        return (1 + X * X) * np.cos(2 * math.pi * Y) * np.sin(T) + X * np.cos(2 * T)

    terms = _terms(g, u, 64, eps=0.2)
    assert abs(terms["t_boundary"]) > 0.1
    assert abs(terms["residual"]) < 1e-5
    assert abs(terms["residual_unweighted"]) > 1e-2


def test_commutators(model):
    res = []
    for N in (128, 256):
        x, y, th = bundle_grid((0.2, 1.0), N, 32, 32)
        res.append(commutator_residuals(model, sample_field(compact_test_function((0.2, 1.0)),
                                                            x, y, th)))
    assert res[1]["[X,V]"] < 1e-10 and res[1]["[V,Xp]"] < 1e-10
    # [X, X_perp] = -K V involves x-derivatives: fourth-order convergence
    assert res[1]["[X,Xp]"] < 1e-4
    assert res[0]["[X,Xp]"] / res[1]["[X,Xp]"] > 8.0


def test_face_density_matches_general_term(model):
    x, y, th = bundle_grid((0.1, 1.0), 16, 24, 32)

    def u(X, Y, T):
        return np.exp(-X) * (1 + 0.3 * np.sin(2 * math.pi * Y)) * (np.cos(T) + 0.5 * np.sin(3 * T))

    f = sample_field(u, x, y, th)
    geom = BundleGeometry(model, x, y)
    general = boundary_term(model, f, faces=("lower",), geom=geom)
    dens = face_boundary_density((geom.A[0], geom.Bx[0]), f.d_theta()[0], f.d_y()[0])
    face = float(dens.sum() * (2 * math.pi / th.size) * (1.0 / y.size))
    assert face == pytest.approx(general, rel=1e-12)


def test_uf_face_term_resolved(model_wide):
    f = bump_field(4, 0.0, 1.0)
    a = uf_face_boundary_term(model_wide, f, 0.2, n_theta=256)
    b = uf_face_boundary_term(model_wide, f, 0.2, n_theta=384)
    assert a.value < 0
    assert a.value == pytest.approx(b.value, rel=2e-3)


def test_grid_validation():
    with pytest.raises(ConfigError):
        SphereBundleField([0.1, 0.3, 0.2], [0.0], [0.0], np.zeros((3, 1, 1)))
    with pytest.raises(ConfigError):
        SphereBundleField([0.1, 0.2], [0.0], [0.0], np.zeros((3, 1, 1)))
    with pytest.raises(MetricError):
        BundleGeometry(GasGiantMetric(1.0, 3), [0.1, 0.2], [0.0])
