"""Pestov identity terms on the unit circle bundle of a truncated 2D collar.

For g = x^-alpha (dx^2 + h(x, y) dy^2) write g = A^2 dx^2 + B^2 dy^2 with
A = x^(-alpha/2), B = x^(-alpha/2) h^(1/2).  A unit vector is
cos(theta) e_1 + sin(theta) e_2 in the frame e_1 = A^-1 d_x, e_2 = B^-1 d_y,
and on SM = {(x, y, theta)}

    X      = cos(theta)/A d_x + sin(theta)/B d_y - B_x sin(theta)/(A B) d_theta,
    V      = d_theta,
    X_perp = [X, V] = sin(theta)/A d_x - cos(theta)/B d_y + B_x cos(theta)/(A B) d_theta.

The identity checked is

    ||V X u||^2 = ||X V u||^2 - (K V u, V u) + (dim - 1) ||X u||^2 + B(u),

with norms against dSigma = A B dx dy dtheta and the boundary term obtained
from the divergence theorem on SM (X, X_perp and V preserve dSigma):

    B(u) = -int_{dSM} [Vu X_perp u <d pi X, n> - Vu Xu <d pi X_perp, n>] dsigma,

n the outward unit normal of the truncated collar and dsigma = B dy dtheta on
the faces x = const.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import simpson

from .curvature import sectional_curvature
from .errors import ConfigError, MetricError


def _fd_x(u, h):
    """Fourth-order first derivative along axis 0 with one-sided rows at both ends."""
    n = u.shape[0]
    if n < 5:
        raise ConfigError("need at least 5 points in x for the fourth-order stencil")
    d = np.empty_like(u)
    d[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    d[0] = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) / (12 * h)
    d[1] = (-3 * u[0] - 10 * u[1] + 18 * u[2] - 6 * u[3] + u[4]) / (12 * h)
    d[-1] = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * h)
    d[-2] = (3 * u[-1] + 10 * u[-2] - 18 * u[-3] + 6 * u[-4] - u[-5]) / (12 * h)
    return d


def _fft_d(u, axis, period):
    n = u.shape[axis]
    if n == 1:
        return np.zeros_like(u)
    k = np.fft.rfftfreq(n, d=period / n) * 2 * math.pi
    if n % 2 == 0:
        k[-1] = 0.0
    shape = [1] * u.ndim
    shape[axis] = k.size
    return np.fft.irfft(1j * k.reshape(shape) * np.fft.rfft(u, axis=axis), n=n, axis=axis)


@dataclass
class SphereBundleField:
    """Values u[i, j, k] at (x_i, y_j, theta_k) on the unit bundle of a 2D collar.

    x is a uniform grid including both faces, y is periodic with period
    ``y_period`` (a single y sample means u does not depend on y), theta is
    periodic on [0, 2 pi).
    """

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    y_period: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, float)
        self.y = np.asarray(self.y, float)
        self.theta = np.asarray(self.theta, float)
        self.values = np.asarray(self.values, float)
        if self.values.shape != (self.x.size, self.y.size, self.theta.size):
            raise ConfigError("values shape does not match the grid")
        dx = np.diff(self.x)
        if dx.size and (np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9)):
            raise ConfigError("x grid must be uniform and increasing")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("u is not finite on the grid")

    @property
    def hx(self):
        return float(self.x[1] - self.x[0])

    def d_x(self, u=None):
        return _fd_x(self.values if u is None else u, self.hx)

    def d_y(self, u=None):
        return _fft_d(self.values if u is None else u, 1, self.y_period)

    def d_theta(self, u=None):
        return _fft_d(self.values if u is None else u, 2, 2 * math.pi)


def bundle_grid(x_range, nx, ny, ntheta, y_period=1.0):
    """Uniform (x, y, theta) grid; y and theta periodic."""
    x = np.linspace(x_range[0], x_range[1], nx)
    y = np.arange(ny) * (y_period / ny)
    th = np.arange(ntheta) * (2 * math.pi / ntheta)
    return x, y, th


def sample_field(fun, x, y, theta, y_period=1.0):
    """SphereBundleField from a vectorized callable u(x, y, theta)."""
    X, Y, T = np.meshgrid(x, y, theta, indexing="ij")
    return SphereBundleField(x, y, theta, fun(X, Y, T), y_period)


class BundleGeometry:
    """Frame coefficients A, B, B_x and Gauss curvature on an (x, y) grid."""

    def __init__(self, metric, x, y):
        if metric.dim != 2:
            raise MetricError("Pestov terms are implemented for dim M = 2")
        a = metric.alpha
        x, y = np.asarray(x, float), np.asarray(y, float)
        if x[0] <= 0:
            raise MetricError("truncation level must be positive")
        nx, ny = x.size, y.size
        self.A = np.empty((nx, ny))
        self.B = np.empty((nx, ny))
        self.Bx = np.empty((nx, ny))
        self.K = np.empty((nx, ny))
        y_inv = getattr(metric.family, "y_invariant", False)
        for i, xv in enumerate(x):
            for j, yv in enumerate(y):
                if y_inv and j > 0:
                    for arr in (self.A, self.B, self.Bx, self.K):
                        arr[i, j] = arr[i, 0]
                    continue
                yy = np.array([yv])
                h = float(metric.boundary_metric(xv, yy)[0, 0])
                hx = float(metric.family.dh(xv, yy)[0][0, 0])
                s = xv ** (-a / 2.0)
                self.A[i, j] = s
                self.B[i, j] = s * math.sqrt(h)
                self.Bx[i, j] = s * (-a / (2 * xv) * math.sqrt(h) + hx / (2 * math.sqrt(h)))
                self.K[i, j] = sectional_curvature(metric, np.array([xv, yv]))
        # broadcast over theta
        self.A, self.B = self.A[..., None], self.B[..., None]
        self.Bx, self.K = self.Bx[..., None], self.K[..., None]


def _apply(geom, f, th, kind, ux=None, uy=None, ut=None):
    c, s = np.cos(th), np.sin(th)
    AB = geom.A * geom.B
    if kind == "X":
        return c / geom.A * ux + s / geom.B * uy - geom.Bx * s / AB * ut
    return s / geom.A * ux - c / geom.B * uy + geom.Bx * c / AB * ut


def _derivs(f, u):
    return f.d_x(u), f.d_y(u), f.d_theta(u)


def _integrate(f, geom, integrand):
    w = integrand * geom.A * geom.B
    # periodic directions: rectangle rule is spectrally accurate
    w = w.sum(axis=2) * (2 * math.pi / f.theta.size)
    w = w.sum(axis=1) * (f.y_period / f.y.size)
    return float(simpson(w, x=f.x))


def boundary_term(metric, f, faces=("lower", "upper"), geom=None):
    """B(u) on the chosen faces x = x[0] ("lower") and x = x[-1] ("upper")."""
    if geom is None:
        geom = BundleGeometry(metric, f.x, f.y)
    th = f.theta[None, None, :]
    u = f.values
    ux, uy, ut = _derivs(f, u)
    Xu = _apply(geom, f, th, "X", ux, uy, ut)
    Pu = _apply(geom, f, th, "P", ux, uy, ut)
    total = 0.0
    for face in faces:
        i, sgn = (0, -1.0) if face == "lower" else (-1, 1.0)
        nX, nP = sgn * np.cos(th[0]), sgn * np.sin(th[0])
        dens = -(ut[i] * Pu[i] * nX - ut[i] * Xu[i] * nP) * geom.B[i]
        dens = dens.sum(axis=1) * (2 * math.pi / f.theta.size)
        total += float(dens.sum() * (f.y_period / f.y.size))
    return total


def unweighted_boundary_term(metric, f, coefficient=1.0, geom=None):
    """Diagnostic: int_{dSM} [<grad^V u, grad^H u> + c u Xu] dsigma without normal weights.

    In 2D <grad^V u, grad^H u> = -Vu X_perp u.  Compared against the
    divergence-theorem term in the identity residual.
    """
    if geom is None:
        geom = BundleGeometry(metric, f.x, f.y)
    th = f.theta[None, None, :]
    u = f.values
    ux, uy, ut = _derivs(f, u)
    Xu = _apply(geom, f, th, "X", ux, uy, ut)
    Pu = _apply(geom, f, th, "P", ux, uy, ut)
    total = 0.0
    for i in (0, -1):
        dens = (-ut[i] * Pu[i] + coefficient * u[i] * Xu[i]) * geom.B[i]
        total += float(dens.sum() * (2 * math.pi / f.theta.size) * (f.y_period / f.y.size))
    return total


def compact_test_function(x_range, y_period=1.0):
    """Smooth u(x, y, theta) compactly supported inside the open x interval."""
    from .fields import bump
    c, w = 0.5 * (x_range[0] + x_range[1]), 0.45 * (x_range[1] - x_range[0])

    def u(X, Y, T):
        return bump((X - c) / w) * (1 + 0.5 * np.cos(2 * math.pi * Y / y_period)) * \
            (np.cos(T) + 0.3 * np.sin(2 * T) + 0.2)
    return u


def pestov_terms(metric, f, geom=None):
    """All terms of the Pestov identity for u sampled on the truncated bundle.

    Returns
    -------
    dict
        lhs = ||V X u||^2, t_xv = ||X V u||^2, t_curv = (K V u, V u),
        t_n = (dim - 1) ||X u||^2, t_boundary = B(u), and the relative
        residual (lhs - rhs) / max|term| with rhs = t_xv - t_curv + t_n + B.
        Also the residuals obtained with coefficient dim on ||X u||^2 and
        with the unweighted boundary form, for comparison.
    """
    if geom is None:
        geom = BundleGeometry(metric, f.x, f.y)
    th = f.theta[None, None, :]
    u = f.values
    ux, uy, ut = _derivs(f, u)
    Xu = _apply(geom, f, th, "X", ux, uy, ut)
    VXu = f.d_theta(Xu)
    XVu = _apply(geom, f, th, "X", *_derivs(f, ut))
    lhs = _integrate(f, geom, VXu ** 2)
    t_xv = _integrate(f, geom, XVu ** 2)
    t_curv = _integrate(f, geom, geom.K * ut ** 2)
    xu2 = _integrate(f, geom, Xu ** 2)
    t_n = (metric.dim - 1) * xu2
    t_b = boundary_term(metric, f, geom=geom)
    t_b_unw = unweighted_boundary_term(metric, f, metric.dim - 1, geom=geom)
    scale = max(abs(lhs), abs(t_xv), abs(t_curv), abs(t_n), abs(t_b))
    out = {"lhs": lhs, "t_xv": t_xv, "t_curv": t_curv, "t_n": t_n, "t_boundary": t_b,
           "t_boundary_unweighted": t_b_unw}
    if scale == 0:
        out.update(residual=0.0, residual_coefficient_dim=0.0, residual_unweighted=0.0)
        return out
    out["residual"] = (lhs - (t_xv - t_curv + t_n + t_b)) / scale
    out["residual_coefficient_dim"] = (lhs - (t_xv - t_curv + metric.dim * xu2 + t_b)) / scale
    out["residual_unweighted"] = (lhs - (t_xv - t_curv + t_n + t_b_unw)) / scale
    return out


def commutator_residuals(metric, f, geom=None):
    """Relative sup errors of [X, V] = X_perp, [V, X_perp] = X, [X, X_perp] = -K V on u."""
    if geom is None:
        geom = BundleGeometry(metric, f.x, f.y)
    th = f.theta[None, None, :]
    u = f.values

    def X(v):
        return _apply(geom, f, th, "X", *_derivs(f, v))

    def P(v):
        return _apply(geom, f, th, "P", *_derivs(f, v))

    V = f.d_theta
    sl = (slice(4, -4),)
    out = {}
    for name, lhs, rhs in (("[X,V]", X(V(u)) - V(X(u)), P(u)),
                           ("[V,Xp]", V(P(u)) - P(V(u)), X(u)),
                           ("[X,Xp]", X(P(u)) - P(X(u)), -geom.K * V(u))):
        d = np.max(np.abs(lhs - rhs)[sl])
        out[name] = float(d / max(np.max(np.abs(rhs)[sl]), 1e-300))
    return out


def uf_bundle_field(metric, field, x, theta, y0=0.0, y_period=1.0, t_max=None):
    """u^f on a (x, theta) grid for a y-invariant metric and y-independent f."""
    from .xray import bundle_nodes, uf_integral
    vals = np.empty((len(x), 1, len(theta)))
    for i, xv in enumerate(x):
        nodes = bundle_nodes(metric, [xv], [y0], theta)
        for k, z in enumerate(nodes):
            vals[i, 0, k] = uf_integral(metric, field, z, t_max=t_max)
    return SphereBundleField(x, [y0], theta, vals, y_period)


def face_boundary_density(geom_row, ut, uy):
    """Density of B(u) on a lower face x = const, against dy dtheta.

    Expanding Vu (X_perp u <d pi X, n> - Xu <d pi X_perp, n>) dsigma with
    n = -e_1 the x-derivatives cancel, leaving (B_x / A) (Vu)^2 - Vu d_y u.
    """
    A, Bx = geom_row
    return Bx / A * ut ** 2 - ut * uy


@dataclass
class FaceTerm:
    eps: float
    value: float
    chebyshev_tail: float       # size of the last interpolation coefficients
    sup_u: float
    sup_vu: float


def uf_face_boundary_term(metric, field, eps, n_theta=384):
    """B(u^f) on the face x = eps, per unit length in y.

    Requires a y-invariant metric and a y-independent f, so u^f depends on
    (x, theta) only.  Normal rays (theta = 0) leave the collar for good while
    nearby rays turn back, so u^f jumps at theta = 0; it is even in theta and
    smooth on (0, pi).  It is sampled at Chebyshev nodes there, differentiated
    through the interpolant, and the face density is integrated as twice its
    integral over (0, pi).
    """
    if not getattr(metric.family, "y_invariant", False):
        raise MetricError("face boundary term needs a y-invariant metric")
    cheb = np.polynomial.chebyshev
    k = np.arange(n_theta)
    s = np.cos(math.pi * (k + 0.5) / n_theta)
    th = 0.5 * math.pi * (1.0 + s)
    u = uf_bundle_field(metric, field, [eps], th, t_max=1e9).values[0, 0]
    coef = cheb.chebfit(s, u, n_theta - 1)
    ut = cheb.chebval(s, cheb.chebder(coef)) * (2.0 / math.pi)
    geom = BundleGeometry(metric, [eps], [0.0])
    dens = face_boundary_density((geom.A[0, 0, 0], geom.Bx[0, 0, 0]), ut, 0.0)
    dcoef = cheb.chebint(cheb.chebfit(s, dens, n_theta - 1), lbnd=-1.0)
    integral = cheb.chebval(1.0, dcoef) * (math.pi / 2.0)
    return FaceTerm(float(eps), 2.0 * float(integral), float(np.abs(coef[-4:]).max()),
                    float(np.abs(u).max()), float(np.abs(ut).max()))


@dataclass
class BoundaryTrend:
    eps: np.ndarray
    values: np.ndarray
    decreasing: bool         # |B_eps| strictly decreasing as eps shrinks
    exponent: float          # fitted p in |B_eps| ~ eps^p
    faces: list = None


def boundary_term_trend(metric, field, eps_list=(0.2, 0.1, 0.05), n_theta=384):
    """B_eps(u^f) on the face x = eps along a shrinking ladder of truncation levels."""
    eps = np.asarray(eps_list, float)
    faces = [uf_face_boundary_term(metric, field, e, n_theta) for e in eps]
    vals = np.array([t.value for t in faces])
    mags = np.abs(vals)
    p = float(np.polyfit(np.log(eps), np.log(mags), 1)[0]) if np.all(mags > 0) else float("nan")
    return BoundaryTrend(eps, vals, bool(np.all(np.diff(mags) < 0)), p, faces)
