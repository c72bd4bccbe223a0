"""Log-log fits and Richardson extrapolation."""

from dataclasses import dataclass

import numpy as np

from .errors import FitError


@dataclass
class LogLogFit:
    exponent: float
    prefactor: float
    rms_residual: float
    expected: float = None
    tol: float = None

    @property
    def passed(self):
        if self.expected is None or self.tol is None:
            return None
        return bool(abs(self.exponent - self.expected) <= self.tol)


def fit_loglog(samples, values, expected=None, tol=None, min_samples=4, min_decades=2.0):
    """Least-squares fit of log|values| = log(prefactor) + exponent * log(samples).

    Raises
    ------
    FitError
        If fewer than ``min_samples`` points are given, the samples span less
        than ``min_decades`` decades, or any sample or value is non-positive.
    """
    s = np.asarray(samples, float).ravel()
    v = np.asarray(values, float).ravel()
    if s.size != v.size:
        raise FitError("samples and values differ in length")
    if s.size < min_samples:
        raise FitError(f"need at least {min_samples} samples, got {s.size}")
    if np.any(~np.isfinite(s)) or np.any(~np.isfinite(v)):
        raise FitError("non-finite sample or value")
    if np.any(s <= 0) or np.any(v <= 0):
        raise FitError("log-log fit needs strictly positive samples and values")
    span = np.log10(s.max() / s.min())
    if span < min_decades:
        raise FitError(f"samples span {span:.2f} decades, need {min_decades}")
    ls, lv = np.log(s), np.log(v)
    A = np.vstack([ls, np.ones_like(ls)]).T
    (k, c), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - (k * ls + c)
    return LogLogFit(float(k), float(np.exp(c)), float(np.sqrt(np.mean(resid ** 2))), expected, tol)


def richardson(values, ratio, order):
    """One Richardson step on a sequence computed at step h, h/ratio, h/ratio^2, ...

    Assumes values[k] = L + C (h/ratio^k)^order + higher order terms and
    returns the improved sequence (one shorter).
    """
    v = np.asarray(values, float)
    f = float(ratio) ** order
    return (f * v[1:] - v[:-1]) / (f - 1.0)


def local_slopes(samples, values):
    """Successive log-log slopes between neighbouring samples."""
    s = np.log(np.asarray(samples, float))
    v = np.log(np.asarray(values, float))
    return np.diff(v) / np.diff(s)
