"""Hamiltonian geodesic flow with a regularized leg near the boundary.

Phase points are packed as ``state = [x, y_1..y_m, xi, eta_1..eta_m]`` with
m = n - 1.  The Hamiltonian is H = x^alpha (xi^2 + h^ij eta_i eta_j) / 2.

Away from the boundary the flow is integrated in time t.  Once a geodesic is
descending with x below the switch height, it is integrated in the boundary
distance w = x^(1-alpha/2) / (1-alpha/2) instead.  With K = x^(alpha/2)|xi|
(so K^2 = 2H - x^alpha |eta|_h^2) the reduced system reads

    dy/dw   = s x^alpha h^-1 eta / K
    deta/dw = -s x^alpha (d_y h^-1)(eta, eta) / (2K)
    dt/dw   = s / K

with s = -1 descending and s = +1 ascending.  All right-hand sides stay
finite at w = 0, so the exit time and exit covector come out of a plain
integration down to the boundary.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, root

from .errors import FlowError, ConvergenceError, NonUniqueError, MetricError
from .metric import FlatFamily
from .fitting import fit_loglog

RTOL = 1e-11
ATOL = 1e-13
KAPPA = 0.3          # switch to the w-leg once x^(a/2)|xi| >= KAPPA * sqrt(2H)
METHOD = "DOP853"


def pack(x, y, xi, eta):
    return np.concatenate([[float(x)], np.atleast_1d(y).astype(float),
                           [float(xi)], np.atleast_1d(eta).astype(float)])


def unpack(state, m):
    s = np.asarray(state, float)
    return s[0], s[1:1 + m], s[1 + m], s[2 + m:2 + 2 * m]


def _parts(metric, x, y):
    fam = metric.family
    if type(fam) is FlatFamily:
        m = len(y)
        return np.eye(m) / fam.scale, np.zeros((m, m)), np.zeros((m, m, m))
    return metric.inverse_parts(x, y)


def hamiltonian(metric, state):
    """H = x^alpha (xi^2 + |eta|_h^2) / 2."""
    x, y, xi, eta = unpack(state, metric.m)
    hinv = _parts(metric, x, y)[0]
    return 0.5 * x ** metric.alpha * (xi * xi + eta @ hinv @ eta)


def hamiltonian_rhs(metric, state):
    """Hamilton's equations for the geodesic flow at ``state``."""
    return _t_rhs(metric, None, 0)(0.0, np.asarray(state, float))


def _t_rhs(metric, integrand, nq):
    a, m = metric.alpha, metric.m

    def rhs(t, s):
        x = abs(s[0])
        y = s[1:1 + m]
        xi = s[1 + m]
        eta = s[2 + m:2 + 2 * m]
        hinv, dxh, dyh = _parts(metric, x, y)
        v = hinv @ eta
        xa = x ** a
        H = 0.5 * xa * (xi * xi + eta @ v)
        out = np.empty(2 + 2 * m + nq)
        out[0] = xa * xi
        out[1:1 + m] = xa * v
        out[1 + m] = -a * H / x - 0.5 * xa * (eta @ dxh @ eta)
        out[2 + m:2 + 2 * m] = -0.5 * xa * np.einsum("kab,a,b->k", dyh, eta, eta)
        if nq:
            out[2 + 2 * m:] = integrand(x, y)
        return out

    return rhs


def _x_of_w(alpha, w):
    p = 1.0 - alpha / 2.0
    return (p * abs(w)) ** (1.0 / p)


def _w_of_x(alpha, x):
    p = 1.0 - alpha / 2.0
    return x ** p / p


def _w_rhs(metric, sign, H2, integrand, nq, y_ref, eta_ref):
    a, m = metric.alpha, metric.m

    def rhs(w, s):
        x = _x_of_w(a, w)
        y = s[:m] + y_ref
        eta = s[m:2 * m] + eta_ref
        hinv, dxh, dyh = _parts(metric, x, y)
        xa = x ** a
        K = math.sqrt(max(H2 - xa * (eta @ hinv @ eta), 1e-300))
        out = np.empty(2 * m + 1 + nq)
        out[:m] = sign * xa * (hinv @ eta) / K
        out[m:2 * m] = -sign * 0.5 * xa * np.einsum("kab,a,b->k", dyh, eta, eta) / K
        out[2 * m] = sign / K
        if nq:
            out[2 * m + 1:] = sign * np.asarray(integrand(x, y), float) / K
        return out

    return rhs


def _k_of(metric, x, y, eta, H2):
    hinv = _parts(metric, x, y)[0]
    return math.sqrt(max(H2 - x ** metric.alpha * (eta @ hinv @ eta), 0.0))


@dataclass
class ExitRecord:
    status: str                  # "exited", "alive" or "trapped_suspect"
    time: float                  # elapsed time from the start to the boundary
    y: np.ndarray = None         # exit point
    eta: np.ndarray = None       # tangential covector at the exit
    v: np.ndarray = None         # h_0^-1 eta, the tangential exit velocity
    integral: np.ndarray = None  # integral of the integrand along the path

    def as_dict(self):
        out = {"status": self.status, "time": self.time}
        for key in ("y", "eta", "v", "integral"):
            val = getattr(self, key)
            if val is not None:
                out[key] = np.atleast_1d(val).tolist()
        return out


@dataclass
class Trajectory:
    """Samples of a geodesic plus its exit record."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    H: np.ndarray
    exit: ExitRecord
    apex: list = field(default_factory=list)     # (t, x) where xi changed sign

    def table(self):
        """Columns t, x, y..., xi, eta..., H as one array."""
        return np.column_stack([self.t, self.x, self.y, self.xi, self.eta, self.H])


class _Recorder:
    def __init__(self, metric, enabled):
        self.metric = metric
        self.enabled = enabled
        self.rows = []

    def add_phase(self, t, states):
        if not self.enabled:
            return
        m = self.metric.m
        for tk, s in zip(t, states):
            x, y, xi, eta = unpack(s[:2 + 2 * m], m)
            self.rows.append((tk, x, y, xi, eta))

    def add_w(self, t, x, y, xi, eta, H=None):
        if self.enabled:
            self.rows.append((t, x, y, xi, eta, H))

    def build(self, exit_record, apex):
        m = self.metric.m
        if not self.rows:
            empty = np.zeros(0)
            return Trajectory(empty, empty, np.zeros((0, m)), empty, np.zeros((0, m)), empty,
                              exit_record, apex)
        t = np.array([r[0] for r in self.rows])
        x = np.array([r[1] for r in self.rows])
        y = np.array([r[2] for r in self.rows]).reshape(-1, m)
        xi = np.array([r[3] for r in self.rows])
        eta = np.array([r[4] for r in self.rows]).reshape(-1, m)
        # on the boundary itself xi is infinite; H is recorded from the leg
        H = np.array([r[5] if len(r) > 5 and r[5] is not None else
                      hamiltonian(self.metric, pack(*r[1:5])) for r in self.rows])
        return Trajectory(t, x, y, xi, eta, H, exit_record, apex)


def diameter_estimate(metric):
    """Rough diameter of the collar, used to size the trapping budget."""
    a = metric.alpha
    w = _w_of_x(a, metric.x_max)
    y0 = metric.y_box.mean(axis=1)
    lam = np.linalg.eigvalsh(np.atleast_2d(metric.boundary_metric(metric.x_max, y0)))[-1]
    span = float(np.linalg.norm(metric.y_box[:, 1] - metric.y_box[:, 0]))
    return 2.0 * w + metric.x_max ** (-a / 2.0) * math.sqrt(lam) * span


def _integrand_size(integrand, metric):
    if integrand is None:
        return 0
    y0 = metric.y_box.mean(axis=1)
    return int(np.atleast_1d(np.asarray(integrand(metric.x_max / 2, y0), float)).size)


def _descend(metric, state, t0, q0, integrand, nq, t_max, rec, apex):
    """Follow ``state`` until it reaches the boundary; returns an ExitRecord."""
    a, m = metric.alpha, metric.m
    x_sw = metric.x_switch
    H2 = 2.0 * hamiltonian(metric, state)
    if not H2 > 0:
        raise FlowError("zero covector")
    sqH2 = math.sqrt(H2)

    def ready(s):
        x, xi = s[0], s[1 + m]
        return min(x_sw - x, -(abs(x) ** (a / 2.0)) * xi - KAPPA * sqH2)

    s = np.concatenate([state, q0]) if nq else np.array(state, float)
    t = t0
    if ready(s) < 0:
        def switch(tt, ss):
            return ready(ss)
        switch.terminal = True
        switch.direction = 1

        def turning(tt, ss):
            return ss[1 + m]
        turning.direction = -1

        sol = solve_ivp(_t_rhs(metric, integrand, nq), (t0, t0 + t_max), s, method=METHOD,
                        rtol=RTOL, atol=ATOL, events=(switch, turning))
        if sol.status == -1:
            raise FlowError(f"integration failed: {sol.message}")
        rec.add_phase(sol.t, sol.y.T)
        for ta, sa in zip(sol.t_events[1], sol.y_events[1]):
            apex.append((float(ta), float(sa[0])))
        if sol.status != 1:
            x, y, xi, eta = unpack(sol.y[:, -1], m)
            status = "trapped_suspect" if x > x_sw else "alive"
            q = sol.y[2 + 2 * m:, -1] if nq else None
            return ExitRecord(status, float(sol.t[-1]), y, eta, None, q)
        s = sol.y_events[0][0]
        t = float(sol.t_events[0][0])

    x, y, xi, eta = unpack(s, m)
    w0 = _w_of_x(a, x)
    ws = np.zeros(2 * m + 1 + nq)
    ws[2 * m] = t
    if nq:
        ws[2 * m + 1:] = s[2 + 2 * m:]
    sol = solve_ivp(_w_rhs(metric, -1.0, H2, integrand, nq, y, eta), (w0, 0.0), ws,
                    method=METHOD, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise FlowError(f"boundary leg failed: {sol.message}")
    for wk, sk in zip(sol.t, sol.y.T):
        xk = _x_of_w(a, wk)
        yk, ek = y + sk[:m], eta + sk[m:2 * m]
        K = _k_of(metric, xk, yk, ek, H2)
        if xk > 0:
            rec.add_w(sk[2 * m], xk, yk, -xk ** (-a / 2.0) * K, ek)
        else:
            rec.add_w(sk[2 * m], xk, yk, -np.inf, ek, 0.5 * H2)
    end = sol.y[:, -1]
    y_bar, eta_bar = y + end[:m], eta + end[m:2 * m]
    hinv0 = _parts(metric, 0.0, y_bar)[0]
    q = end[2 * m + 1:] if nq else None
    return ExitRecord("exited", float(end[2 * m]), y_bar, eta_bar, hinv0 @ eta_bar, q)


def integrate_to_boundary(metric, start, integrand=None, t_max=None, record=True):
    """Integrate the geodesic through phase point ``start`` forward to the boundary.

    Parameters
    ----------
    start : array_like
        Packed phase point [x, y, xi, eta].
    integrand : callable f(x, y), optional
        Scalar or vector function integrated along the path (w.r.t. time).
    t_max : float, optional
        Time budget; geodesics still in the interior after it are reported
        as ``trapped_suspect``.  Defaults to 50 times the collar diameter.

    Returns
    -------
    Trajectory
        Samples (t, x, y, xi, eta, H) and an ExitRecord with the exit time,
        exit point and exit covector.
    """
    state = np.asarray(start, float)
    m = metric.m
    if state.size != 2 + 2 * m:
        raise FlowError(f"phase point must have {2 + 2 * m} entries")
    if not state[0] > 0:
        raise MetricError("start point outside the collar")
    if t_max is None:
        t_max = 50.0 * diameter_estimate(metric)
    nq = _integrand_size(integrand, metric)
    rec = _Recorder(metric, record)
    apex = []
    ex = _descend(metric, state, 0.0, np.zeros(nq), integrand, nq, t_max, rec, apex)
    return rec.build(ex, apex)


def flow(metric, start, t, integrand=None):
    """Phase point after time t (t may be negative); no boundary handling."""
    state = np.asarray(start, float)
    nq = _integrand_size(integrand, metric)
    s0 = np.concatenate([state, np.zeros(nq)])
    if t == 0:
        return s0 if nq else state.copy()
    sol = solve_ivp(_t_rhs(metric, integrand, nq), (0.0, t), s0, method=METHOD,
                    rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise FlowError(sol.message)
    return sol.y[:, -1]


def reverse(state, m):
    """Time reversal (x, y, xi, eta) -> (x, y, -xi, -eta)."""
    s = np.array(state, float)
    s[1 + m:] *= -1.0
    return s


@dataclass
class Scattering:
    y_in: np.ndarray
    eta_in: np.ndarray
    y_out: np.ndarray
    eta_out: np.ndarray
    length: float
    integral: np.ndarray = None
    status: str = "exited"


def scattering_relation(metric, y, eta, integrand=None, t_max=None, H=0.5):
    """Follow the geodesic entering at boundary point y with tangential covector eta.

    The geodesic enters moving in the direction of h_0^-1 eta and is followed
    until it returns to the boundary.  Returns the exit point and covector,
    the length of the chord and the integral of ``integrand`` along it.
    """
    a, m = metric.alpha, metric.m
    y = np.atleast_1d(np.asarray(y, float))
    eta = np.atleast_1d(np.asarray(eta, float))
    if np.allclose(eta, 0):
        raise FlowError("normal rays (eta = 0) do not return to the boundary")
    H2 = 2.0 * H
    sqH2 = math.sqrt(H2)
    nq = _integrand_size(integrand, metric)
    w_sw = _w_of_x(a, metric.x_switch)

    def stop(w, s):
        x = _x_of_w(a, w)
        return min(w_sw - w, _k_of(metric, x, y + s[:m], eta + s[m:2 * m], H2) - KAPPA * sqH2)
    stop.terminal = True
    stop.direction = -1

    s0 = np.zeros(2 * m + 1 + nq)
    sol = solve_ivp(_w_rhs(metric, 1.0, H2, integrand, nq, y, eta), (0.0, w_sw), s0,
                    method=METHOD, rtol=RTOL, atol=ATOL, events=stop)
    if sol.status == -1:
        raise FlowError(f"entry leg failed: {sol.message}")
    end = sol.y_events[0][0] if sol.status == 1 else sol.y[:, -1]
    w1 = float(sol.t_events[0][0]) if sol.status == 1 else w_sw
    x1 = _x_of_w(a, w1)
    y1, eta1 = y + end[:m], eta + end[m:2 * m]
    K = _k_of(metric, x1, y1, eta1, H2)
    state = pack(x1, y1, x1 ** (-a / 2.0) * K, eta1)
    if t_max is None:
        t_max = 50.0 * diameter_estimate(metric)
    rec = _Recorder(metric, False)
    q0 = end[2 * m + 1:] if nq else np.zeros(0)
    ex = _descend(metric, state, float(end[2 * m]), q0, integrand, nq, t_max, rec, [])
    return Scattering(y, eta, ex.y, ex.eta, ex.time, ex.integral, ex.status)


def boundary_tail(metric, exit_record, w_points, H=0.5):
    """Re-trace the last stretch of a geodesic from its exit covector.

    Integrates the reversed geodesic in offset variables (y - y_exit, ...),
    so that tiny displacements near the boundary keep full relative
    precision.  Returns arrays (tau, x, dy, xi) at the requested w values,
    where tau is the time remaining before exit and xi the radial momentum
    of the original (descending) geodesic.
    """
    a, m = metric.alpha, metric.m
    H2 = 2.0 * H
    w_points = np.sort(np.asarray(w_points, float))
    y_bar = np.atleast_1d(exit_record.y).astype(float)
    eta_rev = -np.atleast_1d(exit_record.eta).astype(float)
    sol = solve_ivp(_w_rhs(metric, 1.0, H2, None, 0, y_bar, eta_rev), (0.0, w_points[-1]),
                    np.zeros(2 * m + 1), method=METHOD, rtol=1e-12, atol=1e-300,
                    t_eval=w_points, first_step=min(1e-3 * w_points[0], 1e-12))
    if not sol.success:
        raise FlowError(sol.message)
    x = _x_of_w(a, sol.t)
    dy = sol.y[:m].T
    tau = sol.y[2 * m]
    xi = np.array([-xk ** (-a / 2.0) * _k_of(metric, xk, y_bar + d, eta_rev + e, H2)
                   for xk, d, e in zip(x, dy, sol.y[m:2 * m].T)])
    return tau, x, dy, xi


def expansion_constants(alpha):
    """Leading coefficients of the geodesic as it meets the boundary.

    With tau the time to exit (unit speed):
    x ~ c_x tau^(2/(2-alpha)), |y - y_exit| ~ c_y |v| tau^((2+alpha)/(2-alpha)),
    xi ~ -c_xi tau^(-alpha/(2-alpha)).
    Returns a dict with the derived constants and exponents; ``c_y_stated``
    is the alternative closed form alpha^-1 ((2-alpha)/2)^((2+alpha)/(2-alpha)),
    kept for comparison.
    """
    p = 1.0 - alpha / 2.0
    c_x = p ** (2.0 / (2.0 - alpha))
    return {
        "c_x": c_x,
        "c_y": c_x ** alpha * (2.0 - alpha) / (2.0 + alpha),
        "c_y_stated": ((2.0 - alpha) / 2.0) ** ((2.0 + alpha) / (2.0 - alpha)) / alpha,
        "c_xi": p ** (-alpha / (2.0 - alpha)),
        "exponent_x": 2.0 / (2.0 - alpha),
        "exponent_y": (2.0 + alpha) / (2.0 - alpha),
        "exponent_xi": -alpha / (2.0 - alpha),
        "exponent_shape": (2.0 + alpha) / 2.0,
    }


@dataclass
class ExpansionFit:
    c_x: float
    exponent_x: float
    c_y: float
    exponent_y: float
    c_xi: float
    exponent_xi: float
    shape_constant: float       # |y - y_exit| / (|v| x^((2+alpha)/2))
    exponent_shape: float
    expected: dict


def expansion_fit(metric, trajectory, window=(1e-9, 1e-6), samples=31):
    """Fit the boundary expansions of a unit-speed geodesic over tau in ``window``."""
    ex = trajectory.exit if isinstance(trajectory, Trajectory) else trajectory
    if ex.status != "exited":
        raise FlowError("trajectory did not reach the boundary")
    a = metric.alpha
    w = np.geomspace(window[0], window[1], samples)
    tau, x, dy, xi = boundary_tail(metric, ex, w)
    h0 = np.atleast_2d(metric.boundary_metric(0.0, ex.y))
    vnorm = math.sqrt(ex.v @ h0 @ ex.v)
    dyn = np.sqrt(np.einsum("ij,jk,ik->i", dy, h0, dy))
    fx = fit_loglog(tau, x)
    fy = fit_loglog(tau, dyn / vnorm)
    fxi = fit_loglog(tau, -xi)
    fs = fit_loglog(x, dyn / vnorm, min_decades=1.0)
    return ExpansionFit(fx.prefactor, fx.exponent, fy.prefactor, fy.exponent,
                        fxi.prefactor, fxi.exponent, fs.prefactor, fs.exponent,
                        expansion_constants(a))


def apex_start(metric, x0, y0=None, direction=None):
    """Unit-speed phase point at height x0 moving horizontally (xi = 0)."""
    m = metric.m
    y0 = metric.y_box.mean(axis=1) if y0 is None else np.atleast_1d(y0).astype(float)
    d = np.zeros(metric.dim)
    if direction is None:
        d[1] = 1.0
    else:
        d[1:] = direction
    p = metric.unit_covector(np.concatenate([[x0], y0]), d)
    return pack(x0, y0, 0.0, p[1:])


def exit_time_scaling(metric, x0_ladder=None, y0=None):
    """Exit times from horizontal starts at heights x0; fits T ~ C x0^(1-alpha/2)."""
    if x0_ladder is None:
        x0_ladder = 2.0 ** -np.arange(4, 17)
    x0 = np.asarray(x0_ladder, float)
    T = np.array([integrate_to_boundary(metric, apex_start(metric, v, y0), record=False).exit.time
                  for v in x0])
    fit = fit_loglog(x0, T, expected=1.0 - metric.alpha / 2.0, tol=0.01)
    return x0, T, fit


@dataclass
class Connection:
    y1: np.ndarray
    y2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    length: float
    iterations: int


def _chord(metric, y1, eta, integrand=None):
    sc = scattering_relation(metric, y1, eta, integrand=integrand)
    if sc.status != "exited":
        raise FlowError("connecting geodesic did not return to the boundary")
    return sc


def connect_boundary_points(metric, y1, y2, tol=1e-12, max_iter=60):
    """Shoot for the geodesic joining boundary points y1 and y2.

    In dimension 2 this is a secant iteration on log|eta| against log of the
    chord length (nearly linear, slope -2/alpha for small chords); in higher
    dimension a Newton-type root solve on the tangential covector.

    Raises
    ------
    NonUniqueError
        If the chord length is not monotone in |eta| near the solution.
    ConvergenceError
        If the shooting does not converge.
    """
    y1 = np.atleast_1d(np.asarray(y1, float))
    y2 = np.atleast_1d(np.asarray(y2, float))
    m = metric.m
    delta = y2 - y1
    dist = float(np.linalg.norm(delta))
    if dist == 0:
        raise FlowError("boundary points coincide")
    a = metric.alpha
    if m == 1:
        sgn = math.copysign(1.0, delta[0])

        def f(lp):
            sc = _chord(metric, y1, [sgn * math.exp(lp)])
            return math.log(sgn * (sc.y_out[0] - y1[0])) - math.log(dist), sc

        lp0 = 0.0
        f0, _ = f(lp0)
        lp1 = lp0 + 0.5 * a * f0
        f1, sc = f(lp1)
        it = 2
        while abs(f1) > tol and it < max_iter:
            slope = (f1 - f0) / (lp1 - lp0) if lp1 != lp0 else -2.0 / a
            if not slope < 0:
                if abs(f1) < 1e-9:
                    break
                raise NonUniqueError("chord length is not monotone in the covector")
            step = -f1 / slope
            step = max(min(step, 3.0), -3.0)
            lp0, f0 = lp1, f1
            lp1 = lp1 + step
            f1, sc = f(lp1)
            it += 1
        if abs(f1) > 1e-9:
            raise ConvergenceError(f"shooting did not converge (residual {f1:.2e})")
        return Connection(y1, y2, np.array([sgn * math.exp(lp1)]), sc.eta_out, sc.length, it)

    u = delta / dist
    h0 = metric.boundary_metric(0.0, y1)
    count = [0]

    def F(eta):
        count[0] += 1
        return _chord(metric, y1, eta).y_out - y2

    # flat-model guess: chord ~ c |p|^(-2/alpha), with c measured once
    probe = _chord(metric, y1, h0 @ u)
    c = float(np.linalg.norm(probe.y_out - y1))
    p0 = (c / dist) ** (a / 2.0)
    sol = root(F, p0 * (h0 @ u), method="hybr", options={"xtol": 1e-13})
    if not sol.success:
        raise ConvergenceError(sol.message)
    sc = _chord(metric, y1, sol.x)
    return Connection(y1, y2, sol.x, sc.eta_out, sc.length, count[0])


def boundary_distance_scaling(metric, y1=None, deltas=None, direction=None):
    """d_g(y1, y1 + delta u) over a ladder of delta; slope 1 - alpha/2 recovers alpha."""
    m = metric.m
    y1 = metric.y_box.mean(axis=1) if y1 is None else np.atleast_1d(y1).astype(float)
    u = np.zeros(m)
    u[0] = 1.0
    if direction is not None:
        u = np.asarray(direction, float) / np.linalg.norm(direction)
    if deltas is None:
        deltas = 2.0 ** -np.arange(3, 14)
    deltas = np.asarray(deltas, float)
    h0 = metric.boundary_metric(0.0, y1)
    dh = deltas * math.sqrt(u @ h0 @ u)
    dg = np.array([connect_boundary_points(metric, y1, y1 + d * u).length for d in deltas])
    fit = fit_loglog(dh, dg, expected=1.0 - metric.alpha / 2.0, tol=0.01)
    return dh, dg, fit, 2.0 * (1.0 - fit.exponent)


@dataclass
class CoveringEstimate:
    dimension: float
    expected: float
    deltas: np.ndarray
    counts: np.ndarray


def hausdorff_dimension(metric, y_range=None, n_base=9, n_momenta=28, n_deltas=10,
                        count_range=(16, 4096)):
    """Box-counting dimension of the boundary segment y_range in the distance d_g.

    Dimension 2 only (one boundary coordinate).  For base points along the
    segment, chords of increasing covector are traced to tabulate the reach
    rho(y, delta): the coordinate length covered by a d_g-interval of length
    delta starting at y.  Greedy covering then gives N(delta), and the
    dimension is minus the slope of log N against log delta.
    """
    if metric.m != 1:
        raise NotImplementedError("covering estimate implemented for dimension 2")
    lo, hi = metric.y_box[0] if y_range is None else y_range
    L = hi - lo
    bases = np.array([0.5 * (lo + hi)]) if metric.family.y_invariant else np.linspace(lo, hi, n_base)
    a = metric.alpha
    # chords from ~L/(2 count_max) up to ~L/count_min, using chord ~ p^(-2/alpha)
    probe = _chord(metric, [bases[0]], [1.0])
    c1 = probe.y_out[0] - bases[0]
    p_lo = (c1 / (L / count_range[0])) ** (a / 2.0)
    p_hi = (c1 / (L / (4.0 * count_range[1]))) ** (a / 2.0)
    momenta = np.geomspace(p_lo, p_hi, n_momenta)
    tables = []
    for yb in bases:
        chords, lengths = [], []
        for p in momenta:
            sc = _chord(metric, [yb], [p])
            chords.append(sc.y_out[0] - yb)
            lengths.append(sc.length)
        order = np.argsort(lengths)
        tables.append((np.log(np.array(lengths)[order]), np.log(np.array(chords)[order])))

    def reach(y, delta):
        ld = math.log(delta)
        vals = [math.exp(np.interp(ld, ll, lc)) for ll, lc in tables]
        return float(np.interp(y, bases, vals)) if len(bases) > 1 else vals[0]

    d_lo = max(t[0][0] for t in tables)
    d_hi = min(t[0][-1] for t in tables)
    deltas = np.geomspace(math.exp(d_lo) * 1.5, math.exp(d_hi) / 1.5, n_deltas)
    counts = []
    for d in deltas:
        y, n = lo, 0
        while y < hi:
            y += reach(y, d)
            n += 1
        counts.append(n)
    counts = np.array(counts)
    fit = fit_loglog(deltas, counts, min_decades=0.5)
    return CoveringEstimate(-fit.exponent, 2.0 * (metric.dim - 1) / (2.0 - a), deltas, counts)


@dataclass
class DistanceMap:
    source: np.ndarray
    grid: np.ndarray
    distance: np.ndarray
    ray_exit_y: np.ndarray
    ray_time: np.ndarray


def interior_distance_map(metric, source, boundary_grid, n_directions=720):
    """First-arrival distances from an interior point to boundary points (dimension 2).

    Shoots ``n_directions`` unit-speed rays from the source; for every grid
    point the exit map is bracketed between consecutive rays and the angle
    is refined with a root solve.  The smallest arrival time is kept.
    """
    if metric.m != 1:
        raise NotImplementedError("distance maps implemented for dimension 2")
    z = np.asarray(source, float)
    grid = np.asarray(boundary_grid, float).ravel()

    def shoot(theta):
        cov = metric.unit_covector(z, [math.cos(theta), math.sin(theta)])
        tr = integrate_to_boundary(metric, pack(z[0], z[1:], cov[0], cov[1:]), record=False)
        if tr.exit.status != "exited":
            return np.nan, np.nan
        return tr.exit.y[0], tr.exit.time

    thetas = np.linspace(-math.pi, math.pi, n_directions, endpoint=False)
    ys, ts = np.array([shoot(t) for t in thetas]).T
    dist = np.full(grid.size, np.inf)
    for i in range(n_directions):
        j = (i + 1) % n_directions
        ya, yb = ys[i], ys[j]
        if not (np.isfinite(ya) and np.isfinite(yb)):
            continue
        t0 = thetas[i]
        t1 = thetas[j] if j > i else thetas[j] + 2 * math.pi
        lo_, hi_ = min(ya, yb), max(ya, yb)
        for k in np.nonzero((grid >= lo_) & (grid <= hi_))[0]:
            target = grid[k]
            if target == ya:
                cand = ts[i]
            elif target == yb:
                cand = ts[j]
            else:
                def miss(th, t0=t0, t1=t1, ya=ya, yb=yb, target=target):
                    # endpoints reuse the sweep so that the bracket is exact
                    if th == t0:
                        return ya - target
                    if th == t1:
                        return yb - target
                    return shoot(th)[0] - target
                th = brentq(miss, t0, t1, xtol=1e-14, rtol=1e-14)
                cand = shoot(th)[1]
            dist[k] = min(dist[k], cand)
    return DistanceMap(z, grid, dist, ys, ts)
