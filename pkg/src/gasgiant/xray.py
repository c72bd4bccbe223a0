"""Geodesic X-ray transform, the integral function u^f and checks built on them."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, FlowError
from .fitting import fit_loglog, richardson
from .flow import (apex_start, connect_boundary_points, flow, integrate_to_boundary, pack,
                   reverse, scattering_relation)


def _ray_parts(ray):
    """Split a ray description into ('boundary', y, eta) or ('interior', state)."""
    if isinstance(ray, dict):
        if "state" in ray:
            return "interior", np.asarray(ray["state"], float)
        return "boundary", np.atleast_1d(np.asarray(ray["y"], float)), \
            np.atleast_1d(np.asarray(ray["eta"], float))
    if isinstance(ray, tuple) and len(ray) == 2:
        return "boundary", np.atleast_1d(np.asarray(ray[0], float)), \
            np.atleast_1d(np.asarray(ray[1], float))
    return "interior", np.asarray(ray, float)


def _unit(metric, state):
    # rescale a covector to H = 1/2 so integrals are against arc length
    x, m = state[0], metric.m
    hinv = metric.inverse_parts(x, state[1:1 + m])[0]
    xi, eta = state[1 + m], state[2 + m:]
    H2 = x ** metric.alpha * (xi * xi + eta @ hinv @ eta)
    if not H2 > 0:
        raise FlowError("zero covector")
    s = np.array(state, float)
    s[1 + m:] /= math.sqrt(H2)
    return s


def xray_transform(metric, field, ray, t_max=None):
    """Integral of f along one maximal unit-speed geodesic.

    Parameters
    ----------
    field : callable f(x, y)
        Scalar or vector valued (a vector gives one integral per component).
    ray : tuple or array_like or dict
        ``(y, eta)`` for the geodesic entering at boundary point y with
        tangential covector eta, or a packed interior phase point
        [x, y, xi, eta] (integrated forward and backward to the boundary).

    Raises
    ------
    FlowError
        If the geodesic does not reach the boundary within the time budget.
    """
    parts = _ray_parts(ray)
    if parts[0] == "boundary":
        sc = scattering_relation(metric, parts[1], parts[2], integrand=field, t_max=t_max)
        if sc.status != "exited":
            raise FlowError("ray is trapped")
        return _scalar(sc.integral)
    state = _unit(metric, parts[1])
    total = 0.0
    for s in (state, reverse(state, metric.m)):
        tr = integrate_to_boundary(metric, s, integrand=field, t_max=t_max, record=False)
        if tr.exit.status != "exited":
            raise FlowError("ray is trapped")
        total = total + tr.exit.integral
    return _scalar(total)


def _scalar(v):
    v = np.asarray(v, float)
    return float(v[0]) if v.size == 1 else v


def uf_integral(metric, field, phase_point, t_max=None):
    """u^f(z) = integral of f along the forward orbit of the unit phase point z to exit."""
    state = _unit(metric, np.asarray(phase_point, float))
    tr = integrate_to_boundary(metric, state, integrand=field, t_max=t_max, record=False)
    if tr.exit.status != "exited":
        raise FlowError("orbit is trapped")
    return _scalar(tr.exit.integral)


def bundle_nodes(metric, xs, ys, thetas):
    """Unit phase points at (x, y) moving at angle theta from the inward normal.

    theta is measured in an orthonormal frame, rotating from e_x toward the
    first tangential coordinate direction.
    """
    nodes = []
    for x in np.atleast_1d(xs):
        for y in np.atleast_1d(ys):
            y = np.atleast_1d(y).astype(float)
            for th in np.atleast_1d(thetas):
                d = np.zeros(metric.dim)
                d[0], d[1] = math.cos(th), math.sin(th)
                p = metric.unit_covector(np.concatenate([[x], y]), d)
                nodes.append(pack(x, y, p[0], p[1:]))
    return np.array(nodes)


@dataclass
class TransportReport:
    h: float
    residuals: np.ndarray
    sup: float


def transport_residual(metric, field, nodes, h, require_order=4):
    """Sup over nodes of |X u^f + f| with X applied by centered flow differencing.

    X u^f(z) is approximated by (u^f(phi_h z) - u^f(phi_-h z)) / 2h, where
    each u^f is an independent integration to the boundary.
    """
    if hasattr(field, "check_vanishing"):
        field.check_vanishing(required=require_order)
    m = metric.m
    res = []
    for z in np.atleast_2d(nodes):
        z = _unit(metric, z)
        up = uf_integral(metric, field, flow(metric, z, h))
        um = uf_integral(metric, field, flow(metric, z, -h))
        res.append((up - um) / (2.0 * h) + float(np.atleast_1d(field(z[0], z[1:1 + m]))[0]))
    res = np.abs(np.array(res))
    return TransportReport(h, res, float(res.max()))


@dataclass
class BoundaryProbe:
    y_bar: np.ndarray
    deltas: np.ndarray
    lengths: np.ndarray
    averages: np.ndarray
    extrapolated: float
    rate: float              # fitted exponent of |average - extrapolated|


def boundary_determination_probe(metric, field, y_bar=None, k_range=(3, 10), direction=None):
    """Averages (1/tau_k) * integral of f over the geodesics from y_bar to y_bar + 2^-k u.

    The averages tend to f(0, y_bar) as the chords shrink into the boundary.
    The limit is estimated by repeated Richardson extrapolation in 2^-k
    (orders 1, 2, 3).
    """
    m = metric.m
    y_bar = metric.y_box.mean(axis=1) if y_bar is None else np.atleast_1d(y_bar).astype(float)
    u = np.zeros(m)
    u[0] = 1.0
    if direction is not None:
        u = np.asarray(direction, float) / np.linalg.norm(direction)
    ks = np.arange(k_range[0], k_range[1] + 1)
    deltas = 2.0 ** -ks.astype(float)
    lengths, avgs = [], []

    def integrand(x, y):
        return np.array([float(np.atleast_1d(field(x, y))[0]), 1.0])

    for d in deltas:
        con = connect_boundary_points(metric, y_bar, y_bar + d * u)
        sc = scattering_relation(metric, y_bar, con.eta1, integrand=integrand)
        lengths.append(sc.length)
        avgs.append(sc.integral[0] / sc.integral[1])
    avgs = np.array(avgs)
    seq = avgs
    for order in (1, 2, 3):
        if seq.size < 2:
            break
        seq = richardson(seq, 2.0, order)
    limit = float(seq[-1])
    err = np.abs(avgs - limit)
    rate = float("nan")
    if np.all(err[:-1] > 0):
        try:
            rate = fit_loglog(deltas[:-1], err[:-1], min_decades=1.0).exponent
        except Exception:
            rate = float("nan")
    return BoundaryProbe(y_bar, deltas, np.array(lengths), avgs, limit, rate)


def cubic_bspline(t):
    """Uniform cubic B-spline supported on [0, 4], in truncated-power form."""
    t = np.clip(np.asarray(t, float), 0.0, 4.0)
    p = [np.maximum(t - k, 0.0) ** 3 for k in range(5)]
    return (p[0] - 4 * p[1] + 6 * p[2] - 4 * p[3] + p[4]) / 6.0


class TensorBSplineBasis:
    """N = nx * ny tensor cubic B-splines, each supported inside the box."""

    def __init__(self, x_range, y_range, nx, ny):
        self.x_range, self.y_range = tuple(x_range), tuple(y_range)
        self.nx, self.ny = int(nx), int(ny)
        if self.nx < 1 or self.ny < 1 or x_range[0] <= 0:
            raise ConfigError("basis needs nx, ny >= 1 and a box inside the collar")
        self.hx = (x_range[1] - x_range[0]) / (self.nx + 3)
        self.hy = (y_range[1] - y_range[0]) / (self.ny + 3)
        self.jx = np.arange(self.nx)
        self.jy = np.arange(self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    def __call__(self, x, y):
        y0 = float(np.atleast_1d(y)[0])
        bx = cubic_bspline((x - self.x_range[0]) / self.hx - self.jx)
        if not bx.any():
            return np.zeros(self.size)
        by = cubic_bspline((y0 - self.y_range[0]) / self.hy - self.jy)
        return np.outer(bx, by).ravel()


def ray_catalog(metric, n_y, n_x, rng, x_range=(0.08, 0.9), y_range=(-0.7, 0.7)):
    """Stratified random rays of a 2D collar, given by their turning points.

    One jittered apex (x0, y0) per cell of an n_y by n_x grid over
    ``y_range`` and log ``x_range``, with a random direction of travel.  Each
    apex is traced back to the boundary, so the returned rows (y, eta) are
    the exact entry covectors of geodesics with those turning points.
    """
    if metric.m != 1:
        raise ConfigError("ray catalogs are generated for 2D collars")
    cy = (np.arange(n_y)[:, None] + rng.random((n_y, n_x))) / n_y
    cx = (np.arange(n_x)[None, :] + rng.random((n_y, n_x))) / n_x
    y0 = y_range[0] + (y_range[1] - y_range[0]) * cy.ravel()
    lx = math.log(x_range[0]) + (math.log(x_range[1]) - math.log(x_range[0])) * cx.ravel()
    sign = np.where(rng.random(n_y * n_x) < 0.5, -1.0, 1.0)
    rows = []
    for yv, xv, sg in zip(y0, np.exp(lx), sign):
        start = apex_start(metric, xv, [yv], [sg])
        back = integrate_to_boundary(metric, reverse(start, 1), record=False).exit
        if back.status != "exited":
            raise FlowError(f"apex ({xv}, {yv}) lies on a trapped geodesic")
        rows.append((back.y[0], -back.eta[0]))
    return np.array(rows)


def save_catalog(path, catalog):
    np.savetxt(path, np.atleast_2d(catalog), delimiter=",", header="y,eta", comments="")


def load_catalog(path):
    """Rows (y, eta) from a CSV with a header line."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read ray catalog {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigError("ray catalog needs two columns y, eta")
    return data


@dataclass
class InjectivityReport:
    sigma_min: float
    sigma_max: float
    condition: float
    rank: int
    n_rays: int
    n_basis: int
    floor: float
    passed: bool
    singular_values: np.ndarray = None


def ray_matrix(metric, basis, catalog):
    """A[r, j] = X-ray transform of basis function j along ray r."""
    rows = []
    for y, eta in np.atleast_2d(catalog):
        sc = scattering_relation(metric, [y], [eta], integrand=basis)
        if sc.status != "exited":
            raise FlowError(f"ray (y={y}, eta={eta}) is trapped")
        rows.append(sc.integral)
    return np.array(rows)


def discrete_injectivity_probe(metric, basis, catalog, floor=1e-10, matrix=None):
    """Smallest singular value and condition number of the ray matrix.

    The matrix is indexed by distinct rays: repeated catalog rows (or
    repeated matrix rows) are measured once.  Rank loss is reported through
    ``passed`` and ``rank``, not raised.
    """
    if matrix is None:
        A = ray_matrix(metric, basis, np.unique(np.atleast_2d(catalog), axis=0))
    else:
        A = np.unique(np.atleast_2d(np.asarray(matrix, float)), axis=0)
    s = np.linalg.svd(A, compute_uv=False)
    smin = float(s[-1]) if A.shape[0] >= A.shape[1] else 0.0
    tol = s[0] * max(A.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    cond = float(s[0] / smin) if smin > 0 else float("inf")
    return InjectivityReport(smin, float(s[0]), cond, rank, A.shape[0], A.shape[1], floor,
                             bool(smin > floor), s)
