"""Metrics of the form g = (dx^2 + h(x, y)) / x^alpha and their jets.

Coordinates are z = (x, y_1, ..., y_{n-1}) with x > 0 a boundary defining
function and y coordinates on the boundary.  The boundary family h(x, y) is
a smooth family of positive definite (n-1) x (n-1) matrices, supplied by a
``BoundaryFamily``.  The conformal factor x^-alpha is always differentiated
analytically, so that derivatives stay accurate as x -> 0 even when the
family itself falls back to finite differences.

Index conventions used throughout:

* ``dg[k, i, j]`` is d_k g_ij
* ``ddg[p, k, i, j]`` is d_p d_k g_ij
* ``christoffel[k, i, j]`` is Gamma^k_ij
* ``dchristoffel[p, k, i, j]`` is d_p Gamma^k_ij
* ``riemann[a, b, c, d]`` is R^a_bcd with R(d_c, d_d) d_b = R^a_bcd d_a
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import MetricError, NotPositiveDefiniteError

SPD_FLOOR = 1e-10


def _fd_step(x):
    return 1e-6 * (1.0 + abs(x))


class BoundaryFamily:
    """Base class for the boundary family h(x, y).

    Subclasses implement ``h``; ``dh`` and ``d2h`` fall back to central
    differences (one-sided near x = 0) when no analytic derivative is given.
    """

    #: True when h does not depend on y (enables fast paths and symmetry).
    y_invariant = False

    def h(self, x, y):
        raise NotImplementedError

    def dh(self, x, y):
        """Return (d_x h, d_y h) with d_y h[k] = d h / d y_k."""
        return _fd_first(self.h, x, y, _fd_step(x))

    def d2h(self, x, y):
        """Return (d_xx h, d_xy h, d_yy h) with index layout [k], [k, l]."""
        return _fd_second(self.dh, x, y, 1e-4 * (1.0 + abs(x)))


def _shift(x, y, k, step):
    if k == 0:
        return x + step, y
    y2 = np.array(y, dtype=float)
    y2[k - 1] += step
    return x, y2


def _fd_derivative(fun, x, y, k, step):
    # central difference, or a second-order forward stencil when the
    # backward point would cross x = 0
    if k == 0 and x - step <= 0.0:
        f0 = np.asarray(fun(x, y))
        f1 = np.asarray(fun(*_shift(x, y, 0, step)))
        f2 = np.asarray(fun(*_shift(x, y, 0, 2 * step)))
        return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * step)
    fp = np.asarray(fun(*_shift(x, y, k, step)))
    fm = np.asarray(fun(*_shift(x, y, k, -step)))
    return (fp - fm) / (2.0 * step)


def _fd_first(hfun, x, y, step):
    m = len(y)
    hx = _fd_derivative(hfun, x, y, 0, step)
    hy = np.array([_fd_derivative(hfun, x, y, k + 1, step) for k in range(m)])
    return hx, hy.reshape(m, m, m)


def _fd_second(dhfun, x, y, step):
    m = len(y)
    dx_of = lambda xx, yy: dhfun(xx, yy)[0]
    dy_of = lambda xx, yy: dhfun(xx, yy)[1]
    hxx = _fd_derivative(dx_of, x, y, 0, step)
    hxy = _fd_derivative(dy_of, x, y, 0, step)
    hyy = np.array([_fd_derivative(dy_of, x, y, l + 1, step) for l in range(m)])
    # hyy[l, k] = d_l d_k h; symmetrize the mixed partials
    hyy = 0.5 * (hyy + hyy.transpose(1, 0, 2, 3))
    return hxx, hxy.reshape(m, m, m), hyy.reshape(m, m, m, m)


class FlatFamily(BoundaryFamily):
    """h = scale * identity."""

    y_invariant = True

    def __init__(self, scale=1.0):
        self.scale = float(scale)

    def h(self, x, y):
        return self.scale * np.eye(len(y))

    def dh(self, x, y):
        m = len(y)
        return np.zeros((m, m)), np.zeros((m, m, m))

    def d2h(self, x, y):
        m = len(y)
        return np.zeros((m, m)), np.zeros((m, m, m)), np.zeros((m, m, m, m))


class WarpedFamily(BoundaryFamily):
    """h = rho(x) * sigma(y), sigma flat or a round sphere in angle coordinates.

    Parameters
    ----------
    rho, drho, d2rho : callable
        Warping profile and its first two derivatives.  Missing derivatives
        are taken by finite differences.
    sphere : bool
        If True, sigma is the round metric on S^m in polar angles
        (y_1, ..., y_m): diag(1, sin^2 y_1, sin^2 y_1 sin^2 y_2, ...).
    """

    def __init__(self, rho, drho=None, d2rho=None, sphere=False):
        self.rho = rho
        self.drho = drho
        self.d2rho = d2rho
        self.sphere = bool(sphere)
        self.y_invariant = not self.sphere

    def _rho_jet(self, x):
        r0 = float(self.rho(x))
        s = 1e-5 * (1.0 + abs(x))
        if self.drho is not None:
            r1 = float(self.drho(x))
        else:
            r1 = float(_fd_derivative(lambda a, b: self.rho(a), x, None, 0, s))
        if self.d2rho is not None:
            r2 = float(self.d2rho(x))
        elif self.drho is not None:
            r2 = float(_fd_derivative(lambda a, b: self.drho(a), x, None, 0, s))
        else:
            r2 = float(_fd_derivative(
                lambda a, b: _fd_derivative(lambda c, d: self.rho(c), a, None, 0, s),
                x, None, 0, s * 10))
        return r0, r1, r2

    def _sigma_jet(self, y):
        # diag[i] = prod_{j<i} sin^2 y_j and its first/second derivatives
        m = len(y)
        diag = np.ones(m)
        ddiag = np.zeros((m, m))        # [k, i] = d_k sigma_ii
        dd2 = np.zeros((m, m, m))       # [k, l, i] = d_k d_l sigma_ii
        if not self.sphere:
            return diag, ddiag, dd2
        s2 = np.sin(y) ** 2
        ds2 = np.sin(2 * np.asarray(y))
        d2s2 = 2 * np.cos(2 * np.asarray(y))

        def rest(i, skip):
            return np.prod([s2[j] for j in range(i) if j not in skip])

        for i in range(1, m):
            diag[i] = rest(i, ())
            for k in range(i):
                ddiag[k, i] = ds2[k] * rest(i, (k,))
                dd2[k, k, i] = d2s2[k] * rest(i, (k,))
                for l in range(i):
                    if l != k:
                        dd2[k, l, i] = ds2[k] * ds2[l] * rest(i, (k, l))
        return diag, ddiag, dd2

    def h(self, x, y):
        diag, _, _ = self._sigma_jet(y)
        return float(self.rho(x)) * np.diag(diag)

    def dh(self, x, y):
        r0, r1, _ = self._rho_jet(x)
        diag, ddiag, _ = self._sigma_jet(y)
        hy = np.array([r0 * np.diag(ddiag[k]) for k in range(len(y))])
        return r1 * np.diag(diag), hy

    def d2h(self, x, y):
        r0, r1, r2 = self._rho_jet(x)
        diag, ddiag, dd2 = self._sigma_jet(y)
        m = len(y)
        hxy = np.array([r1 * np.diag(ddiag[k]) for k in range(m)])
        hyy = np.array([[r0 * np.diag(dd2[k, l]) for l in range(m)] for k in range(m)])
        return r2 * np.diag(diag), hxy, hyy


class FunctionFamily(BoundaryFamily):
    """Family given by user callables; missing derivatives use finite differences."""

    def __init__(self, h, dh=None, d2h=None, y_invariant=False):
        self._h = h
        self._dh = dh
        self._d2h = d2h
        self.y_invariant = bool(y_invariant)

    def h(self, x, y):
        return np.atleast_2d(np.asarray(self._h(x, y), dtype=float))

    def dh(self, x, y):
        if self._dh is None:
            return super().dh(x, y)
        hx, hy = self._dh(x, y)
        m = len(y)
        return np.asarray(hx, float).reshape(m, m), np.asarray(hy, float).reshape(m, m, m)

    def d2h(self, x, y):
        if self._d2h is None:
            return super().d2h(x, y)
        m = len(y)
        hxx, hxy, hyy = self._d2h(x, y)
        return (np.asarray(hxx, float).reshape(m, m), np.asarray(hxy, float).reshape(m, m, m),
                np.asarray(hyy, float).reshape(m, m, m, m))


class TabulatedFamily(BoundaryFamily):
    """Scalar h(x, y) (dimension 2) tabulated on a grid, bicubic spline interpolated."""

    def __init__(self, x_nodes, y_nodes, values):
        x_nodes = np.asarray(x_nodes, float)
        y_nodes = np.asarray(y_nodes, float)
        values = np.asarray(values, float)
        if values.shape != (x_nodes.size, y_nodes.size):
            raise MetricError("tabulated h must have shape (len(x), len(y))")
        if x_nodes.size < 4 or y_nodes.size < 4:
            raise MetricError("tabulated h needs at least 4 nodes per axis")
        self.spline = RectBivariateSpline(x_nodes, y_nodes, values, kx=3, ky=3)
        self.y_invariant = bool(np.allclose(values, values[:, :1]))

    def _ev(self, x, y, dx=0, dy=0):
        return float(self.spline.ev(x, y[0], dx=dx, dy=dy))

    def h(self, x, y):
        return np.array([[self._ev(x, y)]])

    def dh(self, x, y):
        return np.array([[self._ev(x, y, dx=1)]]), np.array([[[self._ev(x, y, dy=1)]]])

    def d2h(self, x, y):
        return (np.array([[self._ev(x, y, dx=2)]]),
                np.array([[[self._ev(x, y, dx=1, dy=1)]]]),
                np.array([[[[self._ev(x, y, dy=2)]]]]))


@dataclass
class MetricJet:
    """Metric, inverse, derivatives and Christoffel symbols at one point."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    christoffel: np.ndarray
    ddg: np.ndarray = None
    dchristoffel: np.ndarray = None


def levi_civita_jet(point, g, dg, ddg=None):
    """Christoffel symbols (and their derivatives if ddg is given) from a metric jet."""
    g_inv = np.linalg.inv(g)
    first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    gamma = np.einsum("kl,lij->kij", g_inv, first)
    dgamma = None
    if ddg is not None:
        dfirst = 0.5 * (np.einsum("pijl->plij", ddg) + np.einsum("pjil->plij", ddg) - ddg)
        dg_inv = -np.einsum("ka,pab,bl->pkl", g_inv, dg, g_inv)
        dgamma = (np.einsum("pkl,lij->pkij", dg_inv, first)
                  + np.einsum("kl,plij->pkij", g_inv, dfirst))
    return MetricJet(np.asarray(point, float), g, g_inv, dg, gamma, ddg, dgamma)


def riemann_from_jet(jet):
    """R^a_bcd from Christoffel symbols and their derivatives."""
    G = jet.christoffel
    dG = jet.dchristoffel
    if dG is None:
        raise MetricError("jet has no Christoffel derivatives; request order=2")
    R = (np.einsum("cadb->abcd", dG) - np.einsum("dacb->abcd", dG)
         + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))
    return R


class GasGiantMetric:
    """g = (dx^2 + h(x, y)) / x^alpha on the collar 0 < x <= x_max.

    Parameters
    ----------
    alpha : float
        Conformal exponent, 0 < alpha < 2.
    dim : int
        Dimension n of the manifold (n - 1 boundary coordinates).
    family : BoundaryFamily
        The boundary family h(x, y).  Defaults to the flat family.
    x_max : float
        Height of the collar.
    y_box : sequence of (lo, hi), optional
        Boundary coordinate box used for volumes; defaults to the unit box.
    """

    def __init__(self, alpha, dim, family=None, x_max=1.0, y_box=None):
        alpha = float(alpha)
        if not (0.0 < alpha < 2.0) or not math.isfinite(alpha):
            raise MetricError(f"alpha must lie in (0, 2), got {alpha}")
        dim = int(dim)
        if dim < 2:
            raise MetricError(f"dimension must be at least 2, got {dim}")
        if not x_max > 0:
            raise MetricError("x_max must be positive")
        self.alpha = alpha
        self.dim = dim
        self.family = family if family is not None else FlatFamily()
        self.x_max = float(x_max)
        m = dim - 1
        self.y_box = np.array(y_box if y_box is not None else [(0.0, 1.0)] * m, float)
        if self.y_box.shape != (m, 2):
            raise MetricError("y_box must hold one (lo, hi) pair per boundary coordinate")

    def __repr__(self):
        return (f"GasGiantMetric(alpha={self.alpha}, dim={self.dim}, "
                f"family={type(self.family).__name__}, x_max={self.x_max})")

    @property
    def m(self):
        return self.dim - 1

    @property
    def x_switch(self):
        """Height below which geodesics switch to the regularized system."""
        return min(1e-2, self.x_max / 10.0)

    def check_point(self, point):
        z = np.asarray(point, dtype=float).reshape(-1)
        if z.size != self.dim:
            raise MetricError(f"point must have {self.dim} coordinates")
        if not z[0] > 0.0:
            raise MetricError(f"point outside the collar: x = {z[0]} <= 0")
        if z[0] > self.x_max * (1 + 1e-12):
            raise MetricError(f"point outside the collar: x = {z[0]} > x_max = {self.x_max}")
        return z

    def boundary_metric(self, x, y):
        """h(x, y), checked for positive definiteness."""
        h = self.family.h(x, np.asarray(y, float))
        h = np.atleast_2d(h)
        if self.m == 1:
            ok = h[0, 0] > SPD_FLOOR
        else:
            ok = np.linalg.eigvalsh(0.5 * (h + h.T))[0] > SPD_FLOOR
        if not ok:
            raise NotPositiveDefiniteError(f"h lost positive definiteness at x={x}, y={y}")
        return h

    def inverse_parts(self, x, y):
        """h^-1, d_x(h^-1) and d_y(h^-1) (index [k] for y_k) at (x, y)."""
        h = self.boundary_metric(x, y)
        hinv = np.linalg.inv(h)
        hx, hy = self.family.dh(x, np.asarray(y, float))
        dx_hinv = -hinv @ hx @ hinv
        dy_hinv = -np.einsum("ab,kbc,cd->kad", hinv, hy, hinv)
        return hinv, dx_hinv, dy_hinv

    def metric_tensor(self, point):
        z = np.asarray(point, float)
        x, y = z[0], z[1:]
        gbar = np.zeros((self.dim, self.dim))
        gbar[0, 0] = 1.0
        gbar[1:, 1:] = self.boundary_metric(x, y)
        return x ** (-self.alpha) * gbar

    def jet(self, point, order=2, check=True):
        """Metric jet at ``point``; order=2 also returns Christoffel derivatives."""
        z = self.check_point(point) if check else np.asarray(point, float)
        x, y = z[0], z[1:]
        n, a = self.dim, self.alpha
        h = self.boundary_metric(x, y)
        hx, hy = self.family.dh(x, y)
        gbar = np.zeros((n, n))
        gbar[0, 0] = 1.0
        gbar[1:, 1:] = h
        dgbar = np.zeros((n, n, n))
        dgbar[0, 1:, 1:] = hx
        dgbar[1:, 1:, 1:] = hy
        c0 = x ** (-a)
        dc = np.zeros(n)
        dc[0] = -a * x ** (-a - 1.0)
        g = c0 * gbar
        dg = dc[:, None, None] * gbar + c0 * dgbar
        ddg = None
        if order >= 2:
            hxx, hxy, hyy = self.family.d2h(x, y)
            ddgbar = np.zeros((n, n, n, n))
            ddgbar[0, 0, 1:, 1:] = hxx
            ddgbar[0, 1:, 1:, 1:] = hxy
            ddgbar[1:, 0, 1:, 1:] = hxy
            ddgbar[1:, 1:, 1:, 1:] = hyy
            ddc = np.zeros((n, n))
            ddc[0, 0] = a * (a + 1.0) * x ** (-a - 2.0)
            ddg = (ddc[:, :, None, None] * gbar
                   + dc[:, None, None, None] * dgbar[None, :, :, :]
                   + dc[None, :, None, None] * dgbar[:, None, :, :]
                   + c0 * ddgbar)
        return levi_civita_jet(z, g, dg, ddg)

    def orthonormal_frame(self, point):
        """Columns e_0 = x^(a/2) d_x, e_b = x^(a/2) h^(-1/2) d_y (adapted frame)."""
        z = np.asarray(point, float)
        x, y = z[0], z[1:]
        h = self.boundary_metric(x, y)
        w, v = np.linalg.eigh(0.5 * (h + h.T))
        h_isqrt = v @ np.diag(w ** -0.5) @ v.T
        E = np.zeros((self.dim, self.dim))
        s = x ** (0.5 * self.alpha)
        E[0, 0] = s
        E[1:, 1:] = s * h_isqrt
        return E

    def unit_covector(self, point, direction):
        """Unit covector at ``point`` whose dual is the frame vector combination ``direction``."""
        z = np.asarray(point, float)
        d = np.asarray(direction, float)
        d = d / np.linalg.norm(d)
        v = self.orthonormal_frame(z) @ d
        return self.metric_tensor(z) @ v


class ClassicalMetric:
    """A general Riemannian metric in coordinates, from a callable g(z).

    Used for sanity checks that do not involve the boundary singularity
    (for example the round sphere, where conjugate points are known).
    Derivatives default to central differences.
    """

    alpha = None

    def __init__(self, g, dim, dg=None, ddg=None, step=1e-5):
        self._g = g
        self._dg = dg
        self._ddg = ddg
        self.dim = int(dim)
        self.step = step

    def metric_tensor(self, point):
        return np.asarray(self._g(np.asarray(point, float)), float)

    def _dgfun(self, z):
        if self._dg is not None:
            return np.asarray(self._dg(z), float)
        n, s = self.dim, self.step
        out = np.zeros((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = s
            out[k] = (self.metric_tensor(z + e) - self.metric_tensor(z - e)) / (2 * s)
        return out

    def jet(self, point, order=2, check=True):
        z = np.asarray(point, float)
        g = self.metric_tensor(z)
        dg = self._dgfun(z)
        ddg = None
        if order >= 2:
            if self._ddg is not None:
                ddg = np.asarray(self._ddg(z), float)
            else:
                n, s = self.dim, 1e-4
                ddg = np.zeros((n, n, n, n))
                for p in range(n):
                    e = np.zeros(n)
                    e[p] = s
                    ddg[p] = (self._dgfun(z + e) - self._dgfun(z - e)) / (2 * s)
        return levi_civita_jet(z, g, dg, ddg)


def metric_jet(metric, point, order=2):
    """Metric, inverse, first and second derivatives and Christoffel symbols at a point."""
    return metric.jet(point, order=order)


def round_sphere():
    """The unit 2-sphere in coordinates (theta, phi)."""
    def g(z):
        return np.diag([1.0, math.sin(z[0]) ** 2])

    def dg(z):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2 * math.sin(z[0]) * math.cos(z[0])
        return out

    def ddg(z):
        out = np.zeros((2, 2, 2, 2))
        out[0, 0, 1, 1] = 2 * math.cos(2 * z[0])
        return out

    return ClassicalMetric(g, 2, dg=dg, ddg=ddg)


def _profile_from_params(params):
    """Warping profile rho(x) = sum c_k x^k from JSON parameters."""
    coeffs = [float(c) for c in params.get("coefficients", [1.0])]
    poly = np.polynomial.Polynomial(coeffs)
    d1, d2 = poly.deriv(1), poly.deriv(2)
    return (lambda x: float(poly(x))), (lambda x: float(d1(x))), (lambda x: float(d2(x)))


def metric_from_dict(data):
    """Build a metric from the JSON metric description.

    ``{"alpha", "dim", "x_max", "family": {"kind", "params"}}`` with kind one of
    ``flat`` (optional params.scale, or params.coefficients for a warped
    polynomial profile rho(x)), ``radial_conformal`` (a sound-speed profile
    brought to normal form) or ``tabulated`` (scalar h on an (x, y) grid).
    """
    try:
        alpha = float(data["alpha"])
        dim = int(data["dim"])
        fam = data.get("family", {"kind": "flat"})
        kind = fam.get("kind", "flat")
        params = fam.get("params", {}) or {}
    except (KeyError, TypeError, ValueError) as exc:
        raise MetricError(f"malformed metric description: {exc}") from exc
    x_max = float(data.get("x_max", 1.0))
    y_box = data.get("y_box")
    if kind == "flat":
        if "coefficients" in params:
            rho, drho, d2rho = _profile_from_params(params)
            family = WarpedFamily(rho, drho, d2rho)
        else:
            family = FlatFamily(params.get("scale", 1.0))
    elif kind == "tabulated":
        if dim != 2:
            raise MetricError("tabulated families are supported in dimension 2")
        family = TabulatedFamily(params["x"], params["y"], params["h"])
    elif kind == "radial_conformal":
        from .normal_form import radial_conformal_metric
        return radial_conformal_metric(alpha, dim, params, x_max=x_max)
    else:
        raise MetricError(f"unknown family kind {kind!r}")
    return GasGiantMetric(alpha, dim, family, x_max=x_max, y_box=y_box)


def load_metric(path):
    import json
    with open(path) as fh:
        return metric_from_dict(json.load(fh))


def volume_weight_exponent(alpha, dim):
    """Exponent of x in dV_g = x^(-dim alpha/2) dV_gbar."""
    return -dim * alpha / 2.0
