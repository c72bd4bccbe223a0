"""Scalar test functions f(x, y) on the collar, with a declared vanishing order at x = 0."""

import json
import math

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import ConfigError


def smooth_cutoff(t):
    """C^infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(t):
    """C^infinity bump supported in (-1, 1), equal to 1 at 0."""
    t = np.asarray(t, float)
    inside = np.abs(t) < 1
    return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - t * t, 1.0)), 0.0)


class Field:
    """A function f(x, y) vanishing to order ``vanishing_order`` at x = 0."""

    def __init__(self, fun, vanishing_order, description=""):
        self.fun = fun
        self.vanishing_order = int(vanishing_order)
        self.description = description

    def __call__(self, x, y):
        return self.fun(x, np.atleast_1d(y))

    def check_vanishing(self, y=None, required=None, x_small=(1e-4, 1e-3)):
        """Check that f / x^k stays bounded as x -> 0, k the declared order.

        Raises ConfigError if ``required`` exceeds the declared order or the
        numerical ratio grows like a lower power.
        """
        k = self.vanishing_order
        if required is not None and k < required:
            raise ConfigError(f"field vanishes to order {k}, need at least {required}")
        y = np.zeros(1) if y is None else np.atleast_1d(y)
        vals = [abs(float(self(x, y))) for x in x_small]
        r = [v / x ** k if v > 0 else 0.0 for v, x in zip(vals, x_small)]
        if r[1] > 0 and r[0] > 20.0 * r[1]:
            raise ConfigError("field does not vanish to its declared order")
        return True


def polynomial_field(coefficients, y_width=None, y_center=0.0):
    """f = sum_k c_k x^k, optionally times a Gaussian in y."""
    c = [float(v) for v in coefficients]
    order = next((k for k, v in enumerate(c) if v != 0.0), len(c))
    poly = np.polynomial.Polynomial(c)

    def fun(x, y):
        val = float(poly(x))
        if y_width is not None:
            val *= math.exp(-((y[0] - y_center) / y_width) ** 2)
        return val
    return Field(fun, order, f"poly{c}")


def bump_field(order=4, x_center=0.3, x_width=0.25, y_center=0.0, y_width=None):
    """f = x^order * bump((x - x_center)/x_width) * bump((y - y_center)/y_width)."""
    def fun(x, y):
        val = x ** order * float(bump((x - x_center) / x_width))
        if y_width is not None:
            val *= float(bump((y[0] - y_center) / y_width))
        return val
    return Field(fun, order, "bump")


def tabulated_field(x_nodes, y_nodes, values, vanishing_order):
    spline = RectBivariateSpline(np.asarray(x_nodes, float), np.asarray(y_nodes, float),
                                 np.asarray(values, float), kx=3, ky=3)

    def fun(x, y):
        return float(spline.ev(x, y[0]))
    return Field(fun, vanishing_order, "tabulated")


def field_from_dict(data):
    """Build a field from ``{"kind": "bump"|"poly"|"tabulated", "vanishing_order", "params"}``."""
    try:
        kind = data["kind"]
        params = data.get("params", {}) or {}
        order = data.get("vanishing_order")
        if kind == "poly":
            f = polynomial_field(params["coefficients"], params.get("y_width"),
                                 params.get("y_center", 0.0))
        elif kind == "bump":
            f = bump_field(int(order if order is not None else 4), params.get("x_center", 0.3),
                           params.get("x_width", 0.25), params.get("y_center", 0.0),
                           params.get("y_width"))
        elif kind == "tabulated":
            f = tabulated_field(params["x"], params["y"], params["values"], int(order))
        else:
            raise ConfigError(f"unknown field kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed field description: {exc}") from exc
    if order is not None and int(order) != f.vanishing_order:
        if int(order) > f.vanishing_order:
            raise ConfigError("declared vanishing order exceeds the field's actual order")
        f.vanishing_order = int(order)
    return f


def load_field(path):
    with open(path) as fh:
        return field_from_dict(json.load(fh))
