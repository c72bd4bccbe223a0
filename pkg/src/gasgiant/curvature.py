"""Curvature, volume growth and boundary convexity for gas-giant metrics."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .errors import MetricError
from .metric import riemann_from_jet, volume_weight_exponent
from .fitting import fit_loglog


def riemann_lowered(metric, point):
    """Fully covariant Riemann tensor R_abcd = g_ae R^e_bcd at ``point``."""
    jet = metric.jet(point, order=2)
    R = riemann_from_jet(jet)
    return np.einsum("ae,ebcd->abcd", jet.g, R), jet


def sectional_curvature(metric, point, plane_pair=(0, 1)):
    """Sectional curvature of the plane spanned by two adapted frame vectors.

    Frame index 0 is the unit radial vector x^(alpha/2) d_x; indices
    1..n-1 are h-orthonormal tangential vectors scaled by x^(alpha/2).
    """
    i, j = plane_pair
    if i == j:
        raise MetricError("plane needs two distinct frame vectors")
    Rl, jet = riemann_lowered(metric, point)
    E = metric.orthonormal_frame(point)
    u, v = E[:, i], E[:, j]
    num = np.einsum("abcd,a,b,c,d->", Rl, u, v, u, v)
    uu, vv, uv = u @ jet.g @ u, v @ jet.g @ v, u @ jet.g @ v
    return float(num / (uu * vv - uv * uv))


def sectional_curvatures(metric, point):
    """All frame-plane sectional curvatures as a symmetric matrix (diagonal zero)."""
    Rl, jet = riemann_lowered(metric, point)
    E = metric.orthonormal_frame(point)
    Rf = np.einsum("abcd,ai,bj,ck,dl->ijkl", Rl, E, E, E, E)
    n = metric.dim
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                K[i, j] = Rf[i, j, i, j]
    return K


def asymptotic_curvature_constants(alpha):
    """Limits of x^(2-alpha) K for radial-tangential and tangential planes."""
    return -alpha / 2.0, -alpha * alpha / 4.0


def distance_curvature_constants(alpha):
    """Limits of s^2 K with s = x^(1-alpha/2)/(1-alpha/2) the boundary distance."""
    d = (2.0 - alpha) ** 2
    return -2.0 * alpha / d, -alpha * alpha / d


def boundary_distance(alpha, x):
    """Distance to the boundary along a normal ray, x^(1-alpha/2)/(1-alpha/2)."""
    return np.asarray(x, float) ** (1.0 - alpha / 2.0) / (1.0 - alpha / 2.0)


@dataclass
class CurvatureLaw:
    """Rescaled curvatures along a sequence of points approaching the boundary."""

    x: np.ndarray
    radial: np.ndarray          # x^(2-alpha) K(e_0, e_1)
    tangential: np.ndarray      # x^(2-alpha) K(e_1, e_2); nan in dimension 2
    radial_distance: np.ndarray  # s^2 K(e_0, e_1)
    tangential_distance: np.ndarray
    expected: tuple
    expected_distance: tuple


def curvature_distance_law(metric, samples):
    """Evaluate the rescaled curvature laws at the sample points.

    Parameters
    ----------
    samples : array_like, shape (k, n)
        Points (x, y) in the collar, typically with decreasing x.
    """
    pts = np.atleast_2d(np.asarray(samples, float))
    a = metric.alpha
    rad, tan = [], []
    for z in pts:
        K = sectional_curvatures(metric, z)
        rad.append(K[0, 1])
        tan.append(K[1, 2] if metric.dim > 2 else np.nan)
    x = pts[:, 0]
    rad, tan = np.array(rad), np.array(tan)
    scale = x ** (2.0 - a)
    s2 = boundary_distance(a, x) ** 2
    return CurvatureLaw(x, scale * rad, scale * tan, s2 * rad, s2 * tan,
                        asymptotic_curvature_constants(a), distance_curvature_constants(a))


def _gauss_legendre_box(box, order):
    pts, wts = np.polynomial.legendre.leggauss(order)
    axes, weights = [], []
    for lo, hi in box:
        axes.append(0.5 * (hi - lo) * pts + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * wts)
    grid = np.meshgrid(*axes, indexing="ij")
    wgrid = np.meshgrid(*weights, indexing="ij")
    nodes = np.stack([g.ravel() for g in grid], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    return nodes, w


def slice_area(metric, x, order=12):
    """Integral of sqrt(det h(x, .)) over the boundary coordinate box."""
    box = metric.y_box
    if metric.family.y_invariant:
        y0 = box.mean(axis=1)
        return float(np.sqrt(np.linalg.det(metric.boundary_metric(x, y0))) * np.prod(box[:, 1] - box[:, 0]))
    nodes, w = _gauss_legendre_box(box, order)
    vals = [math.sqrt(np.linalg.det(metric.boundary_metric(x, y))) for y in nodes]
    return float(np.dot(w, vals))


def volume_sublevel(metric, eps, x_top=None):
    """Riemannian volume of {eps <= x <= x_top} (x_top defaults to x_max).

    The volume form is x^(-n alpha/2) sqrt(det h) dx dy; the x integral is
    done in t = log x so that the power-law growth is resolved at small eps.
    """
    if not eps > 0:
        raise MetricError("eps must be positive")
    x_top = metric.x_max if x_top is None else x_top
    p = 1.0 + volume_weight_exponent(metric.alpha, metric.dim)

    def integrand(t):
        x = math.exp(t)
        return math.exp(p * t) * slice_area(metric, x)

    val, _ = integrate.quad(integrand, math.log(eps), math.log(x_top),
                            limit=400, epsabs=0.0, epsrel=1e-12)
    return val


@dataclass
class VolumeGrowth:
    regime: str                 # "power", "log" or "finite"
    exponent: float             # fitted exponent of Vol (or of the remainder when finite)
    expected_exponent: float
    log_coefficient: float      # Vol / (-log eps) slope in the log regime
    eps: np.ndarray
    volumes: np.ndarray


def volume_growth(metric, eps_ladder=None):
    """Classify and fit the growth of Vol({x >= eps}) as eps -> 0.

    alpha > 2/n gives Vol ~ C eps^(1 - n alpha/2); alpha = 2/n gives
    logarithmic growth; alpha < 2/n gives finite volume, in which case the
    exponent of the missing volume Vol(M) - Vol({x >= eps}) is fitted.
    """
    if eps_ladder is None:
        eps_ladder = 2.0 ** -np.arange(14, 34, 2)
    eps = np.sort(np.asarray(eps_ladder, float))[::-1]
    n, a = metric.dim, metric.alpha
    expected = 1.0 - n * a / 2.0
    vols = np.array([volume_sublevel(metric, e) for e in eps])
    crit = 2.0 / n
    if abs(a - crit) <= 1e-12 * crit:
        regime = "log"
        slope = np.polyfit(np.log(eps), vols, 1)[0]
        exponent = 0.0
        log_coeff = -slope
    elif a > crit:
        regime = "power"
        exponent = fit_loglog(eps, vols).exponent
        log_coeff = float("nan")
    else:
        regime = "finite"
        total = volume_sublevel(metric, 1e-300)
        exponent = fit_loglog(eps, total - vols).exponent
        log_coeff = float("nan")
    return VolumeGrowth(regime, float(exponent), expected, float(log_coeff), eps, vols)


def shape_operator(metric, x, y, normalized=True):
    """Shape operator of the level set {x = const} for the inward unit normal.

    Returned as a matrix acting on boundary coordinate vectors,
    S(Y) = -nabla_Y nu with nu = x^(alpha/2) d_x.  With ``normalized`` the
    operator is multiplied by x^(1-alpha/2) (the factor relating the unit
    normal to the rescaled normal x d_x), which makes the eigenvalues tend to
    alpha/2 at the boundary.
    """
    z = np.concatenate([[x], np.atleast_1d(y)]).astype(float)
    jet = metric.jet(z, order=1)
    m = metric.m
    # nabla_{d_i}(x^(a/2) d_x) = x^(a/2) Gamma^a_{i0} d_a; tangential part only
    S = -x ** (metric.alpha / 2.0) * jet.christoffel[1:, 1:, 0].reshape(m, m)
    if normalized:
        S = S * x ** (1.0 - metric.alpha / 2.0)
    return S


def second_fundamental_form(metric, eps, y, normalized=True):
    """Eigenvalues of the shape operator of {x = eps}; positive means convex."""
    S = shape_operator(metric, eps, y, normalized=normalized)
    return np.sort(np.linalg.eigvals(S).real)
