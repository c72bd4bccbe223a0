from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gasgiant.errors import MetricError
from gasgiant.spectral import (TruncatedEigenproblem, assemble_radial, bessel_oracle,
                               eigenfunction_boundary_profile, eigenvalues_truncated,
                               indicial_data, limit_eigenvalues)


@pytest.mark.parametrize("alpha,n,roots,window,esa", [
    (1.0, 2, (0, 1), (0, 1), False),
    (1.0, 4, (0, 2), (0.5, 1.5), True),
    (0.5, 2, (0, 1), (-0.25, 1.25), False),
])
def test_indicial_table(alpha, n, roots, window, esa):
    d = indicial_data(alpha, n)
    assert d.roots == roots
    assert d.cutoff_window == window
    assert d.essentially_self_adjoint is esa


@given(st.fractions(Fraction(1, 64), Fraction(127, 64), max_denominator=64), st.integers(2, 12))
def test_midpoints_coincide(alpha, n):
    d = indicial_data(alpha, n)
    assert d.exact["midpoint_roots"] == d.exact["midpoint_window"]
    assert d.exact["gamma_plus"] == alpha * (Fraction(n, 2) - 1) + 1


def test_indicial_rejects_bad_input():
    with pytest.raises(MetricError):
        indicial_data(2.0, 3)
    with pytest.raises(MetricError):
        indicial_data(1.0, 1)


def test_operator_on_quadratic():
    # L = x u'' for alpha=1, n=2, mu=0; u = x(1-x) gives -2x (the scheme is exact on quadratics here)
    for N in (64, 128):
        op = assemble_radial(TruncatedEigenproblem(1.0, 2, eps=0.01, N=N))
        x = op.x
        assert np.max(np.abs(op.apply(x * (1 - x)) + 2 * x[1:-1])) < 1e-6


def test_operator_second_order_on_cubic():
    # alpha=1, n=4: L u = x u'' - u'; u = x^3 gives 6x^2 - 3x^2 = 3x^2
    errs = []
    for N in (64, 128):
        op = assemble_radial(TruncatedEigenproblem(1.0, 4, eps=0.05, N=N))
        x = op.x
        errs.append(np.max(np.abs(op.apply(x ** 3) - 3 * x[1:-1] ** 2)))
    assert errs[0] / errs[1] > 3.0


@pytest.mark.parametrize("alpha,n", [(1.0, 2), (1.0, 4), (0.5, 3), (1.5, 5)])
def test_drift_exact_on_linear(alpha, n):
    op = assemble_radial(TruncatedEigenproblem(alpha, n, eps=1e-3, N=100))
    x = op.x
    drift = -alpha * (n / 2 - 1) * x[1:-1] ** (alpha - 1)
    assert np.max(np.abs(op.apply(x) - drift) / (1 + np.abs(drift))) < 1e-8


@given(st.floats(0.2, 1.8), st.integers(2, 6), st.floats(0, 4))
def test_discrete_symmetry(alpha, n, mu):
    op = assemble_radial(TruncatedEigenproblem(alpha, n, mu=mu, eps=1e-3, N=200))
    assert op.symmetry_residual() < 1e-10


def test_dirichlet_monotonicity():
    prev = None
    for eps in (0.2, 0.1, 0.05, 0.025):
        vals, _, _ = eigenvalues_truncated(TruncatedEigenproblem(1.0, 4, eps=eps, N=600), 3)
        if prev is not None:
            assert np.all(vals < prev)
        prev = vals


def test_bessel_limit():
    lam = limit_eigenvalues(1.0, 2, k=2)
    assert bessel_oracle(1)[0] == pytest.approx(3.67049, abs=1e-5)
    assert lam[0] == pytest.approx(3.67049, rel=1e-5)
    assert lam[1] == pytest.approx(12.3047, rel=1e-4)


def test_bessel_oracle_independent():
    from scipy.optimize import brentq
    from scipy.special import j1
    z1 = brentq(j1, 3.0, 4.5, xtol=1e-14)
    assert bessel_oracle(1)[0] == pytest.approx(z1 ** 2 / 4, rel=1e-10)


@pytest.mark.parametrize("alpha,n,eps,beta", [(1.0, 2, 1e-10, 1.0), (1.0, 4, 1e-10, 2.0)])
def test_eigenfunction_profile(alpha, n, eps, beta):
    prof = eigenfunction_boundary_profile(TruncatedEigenproblem(alpha, n, eps=eps, N=2000))
    assert prof.beta == pytest.approx(beta, abs=0.05)
    assert prof.wall_slope == pytest.approx(1.0, abs=0.01)
    assert prof.bound_spread < 10


def test_problem_validation():
    with pytest.raises(MetricError):
        TruncatedEigenproblem(1.0, 2, eps=0.0)
    with pytest.raises(MetricError):
        TruncatedEigenproblem(1.0, 2, mu=-1.0)
