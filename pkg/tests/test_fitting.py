import numpy as np
import pytest
from hypothesis import given, strategies as st

from gasgiant.errors import FitError
from gasgiant.fitting import fit_loglog, local_slopes, richardson


def test_exact_power():
    s = np.geomspace(1e-3, 1.0, 10)
    fit = fit_loglog(s, s ** 2, expected=2.0, tol=1e-12)
    assert abs(fit.exponent - 2.0) < 1e-12
    assert abs(np.log(fit.prefactor)) < 1e-12
    assert fit.passed


def test_perturbed_power():
    s = np.geomspace(1e-6, 1e-3, 12)
    fit = fit_loglog(s, 3 * s ** 0.5 * (1 + 0.01 * s))
    assert abs(fit.exponent - 0.5) < 1e-3


def test_too_few_samples():
    with pytest.raises(FitError):
        fit_loglog([1e-3, 1e-2, 1e-1], [1.0, 2.0, 3.0])


def test_nonpositive_values():
    with pytest.raises(FitError):
        fit_loglog(np.geomspace(1e-4, 1, 6), [1, 2, 0, 4, 5, 6])


def test_narrow_span():
    with pytest.raises(FitError):
        fit_loglog(np.linspace(1.0, 2.0, 6), np.ones(6))


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_recovers_any_power(p, c):
    s = np.geomspace(1e-4, 1.0, 8)
    fit = fit_loglog(s, c * s ** p)
    assert abs(fit.exponent - p) < 1e-10
    assert abs(fit.prefactor / c - 1) < 1e-10


def test_richardson_removes_leading_order():
    h = 2.0 ** -np.arange(6)
    v = 1.5 + 0.7 * h ** 2 + 0.1 * h ** 4
    r = richardson(v, 2.0, 2)
    err = np.abs(r - 1.5)
    assert np.allclose(err[:-1] / err[1:], 16.0)
    assert np.allclose(local_slopes(h, v - 1.5)[-3:], 2.0, atol=1e-2)
