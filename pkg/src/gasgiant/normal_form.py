"""Polytropic sound-speed profiles and the radial normal form near the surface.

A radially symmetric metric c(r)^-2 (dr^2 + r^2 dOmega^2) whose sound speed
vanishes like (R - r)^(alpha/2) at the surface r = R is brought to the form
x^-alpha (dx^2 + h(x)) by solving the eikonal equation |dx / x^(alpha/2)|_g = 1
for the new boundary defining function x.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import solve_ivp, quad
from scipy.interpolate import CubicSpline

from .errors import AlphaMismatchError, ConvergenceError, MetricError
from .fitting import fit_loglog
from .metric import GasGiantMetric, WarpedFamily


@dataclass
class LaneEmden:
    """Solution of theta'' + (N-1) theta'/r + theta^n = 0, theta(0)=1, theta'(0)=0."""

    n_poly: float
    dim: int
    radius: float
    dtheta_surface: float
    _sol: object
    _depth_sol: object = None

    def theta(self, r):
        r = np.asarray(r, float)
        out = self._sol.sol(np.clip(r, self._sol.t[0], self.radius))[0]
        return np.where(r < self._sol.t[0], _series(self.n_poly, self.dim, r)[0], out)

    def theta_depth(self, d):
        """theta(R - d), accurate to relative precision for small depth d."""
        if self._depth_sol is None:
            self._depth_sol = _integrate_depth(self)
        return self._depth_sol.sol(np.asarray(d, float))[0]

    def sound_speed(self, r):
        """c proportional to theta^(1/2)."""
        return np.sqrt(np.maximum(self.theta(r), 0.0))

    def sound_speed_depth(self, d):
        return np.sqrt(np.maximum(self.theta_depth(d), 0.0))


def _series(n, N, r):
    r = np.asarray(r, float)
    a, b = -1.0 / (2 * N), n / (8.0 * N * (N + 2))
    return 1 + a * r ** 2 + b * r ** 4, 2 * a * r + 4 * b * r ** 3


def lane_emden(n_poly, dim=3, r_max=50.0, rtol=1e-13):
    """Integrate the Lane-Emden equation out to the first zero of theta.

    Starts from the series theta = 1 - r^2/(2N) + n r^4/(8N(N+2)) at small r
    and stops on the event theta = 0, which defines the radius R.

    Raises
    ------
    ConvergenceError
        If theta has no zero before ``r_max`` (polytropic index >= 5).
    """
    n, N = float(n_poly), int(dim)
    if n < 0:
        raise MetricError("polytropic index must be non-negative")

    def rhs(r, s):
        th, dth = s
        return [dth, -(N - 1) * dth / r - max(th, 0.0) ** n]

    def surface(r, s):
        return s[0]
    surface.terminal = True
    surface.direction = -1

    r0 = 1e-3
    th0, dth0 = _series(n, N, r0)
    sol = solve_ivp(rhs, (r0, r_max), [float(th0), float(dth0)], method="DOP853",
                    rtol=rtol, atol=1e-15, events=surface, dense_output=True)
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise ConvergenceError(f"theta has no zero within r <= {r_max} for n = {n}")
    R = float(sol.t_events[0][0])
    return LaneEmden(n, N, R, float(sol.y_events[0][0][1]), sol)


def _integrate_depth(le):
    # Theta(d) = theta(R - d): Theta'' = (N-1) Theta'/(R-d) - Theta^n, started
    # at the surface so small depths keep full relative precision
    N, n, R = le.dim, le.n_poly, le.radius

    def rhs(d, s):
        th, dth = s
        return [dth, (N - 1) * dth / (R - d) - max(th, 0.0) ** n]

    return solve_ivp(rhs, (0.0, 0.9 * R), [0.0, -le.dtheta_surface], method="DOP853",
                     rtol=1e-13, atol=1e-300, dense_output=True, first_step=1e-12 * R)


def profile_exponent(depth_fun, radius, window=(1e-5, 1e-2), samples=25):
    """Fit alpha from c ~ (R - r)^(alpha/2): alpha = 2 * slope of log c against log depth."""
    d = np.geomspace(window[0] * radius, window[1] * radius, samples)
    c = np.array([float(depth_fun(v)) for v in d])
    return 2.0 * fit_loglog(d, c).exponent


@dataclass
class NormalForm:
    metric: GasGiantMetric
    alpha: float
    depth: np.ndarray       # R - r on the output grid
    x_hat: np.ndarray       # normalized depth a * (R - r)
    omega: np.ndarray       # x = exp(omega) * x_hat
    x: np.ndarray
    distance: np.ndarray    # boundary distance by quadrature
    eikonal_residual: float


def normal_form_radial(c_depth, radius, dim=2, alpha=None, collar=0.2, n_grid=200,
                       alpha_tol=1e-2):
    """Solve for the boundary defining function x with |dx / x^(alpha/2)|_g = 1.

    Parameters
    ----------
    c_depth : callable
        Sound speed as a function of depth d = R - r (depth keeps precision
        near the surface, where c ~ d^(alpha/2)).
    radius : float
        Surface radius R.
    dim : int
        Dimension of the ball.
    alpha : float, optional
        Declared exponent; compared against the measured one.
    collar : float
        Depth of the collar, as a fraction of R.

    Returns
    -------
    NormalForm
        The metric x^-alpha (dx^2 + rho(x) dOmega^2) plus the correction
        omega(x_hat), where x_hat = a d is the normalized depth.

    Notes
    -----
    Writing x = exp(omega) x_hat, the eikonal equation for a radial x becomes
    the scalar ODE  x_hat omega' = exp((alpha-2) omega/2) N^(-1/2) - 1  with
    N = |d x_hat|^2 in x_hat^alpha g.  Its linearization at x_hat = 0 has the
    stable coefficient (alpha-2)/2 < 0, so the regular solution is picked out
    by marching in log x_hat from deep in the boundary layer.
    """
    R = float(radius)
    d_fit = np.geomspace(1e-10 * R, 1e-7 * R, 12)
    c_fit = np.array([float(c_depth(v)) for v in d_fit])
    measured = 2.0 * fit_loglog(d_fit, c_fit).exponent
    if alpha is None:
        alpha = measured
    elif abs(measured - alpha) > alpha_tol:
        raise AlphaMismatchError(f"declared alpha={alpha} but profile gives {measured:.4f}")
    a_ = float(alpha)
    if not 0 < a_ < 2:
        raise MetricError(f"profile exponent {a_} outside (0, 2)")

    d_ref = 1e-10 * R
    scale = (d_ref ** a_ / float(c_depth(d_ref)) ** 2) ** (1.0 / (2.0 - a_))

    def N_of(xh):
        d = xh / scale
        return float(c_depth(d)) ** 2 * scale ** (2.0 - a_) / d ** a_

    def rhs(t, w):
        xh = math.exp(t)
        return [math.exp(0.5 * (a_ - 2.0) * w[0]) / math.sqrt(N_of(xh)) - 1.0]

    d_top = collar * R
    t0, t1 = math.log(scale * 1e-14 * R), math.log(scale * d_top)
    sol = solve_ivp(rhs, (t0, t1), [0.0], method="DOP853", rtol=1e-12, atol=1e-14,
                    dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"normal form march failed: {sol.message}")

    depth = np.geomspace(1e-6 * d_top, d_top, n_grid)
    x_hat = scale * depth
    omega = sol.sol(np.log(x_hat))[0]
    x = np.exp(omega) * x_hat

    # independent route: boundary distance by quadrature of 1/c
    p = 1.0 - a_ / 2.0
    c0 = float(c_depth(d_ref)) / d_ref ** (a_ / 2.0)

    def dist(d):
        start = d_ref * 1e-4
        head = start ** p / (p * c0)
        val, _ = quad(lambda t: math.exp(t) / float(c_depth(math.exp(t))),
                      math.log(start), math.log(d), epsabs=0.0, epsrel=1e-13, limit=200)
        return head + val

    s = np.array([dist(v) for v in depth])
    residual = float(np.max(np.abs(x ** p / p / s - 1.0)))

    sphere = dim > 2
    rho = x ** a_ * (R - depth) ** 2 / np.array([float(c_depth(v)) for v in depth]) ** 2
    spline = CubicSpline(x, rho)
    d1, d2 = spline.derivative(1), spline.derivative(2)
    family = WarpedFamily(lambda v: float(spline(v)), lambda v: float(d1(v)),
                          lambda v: float(d2(v)), sphere=sphere)
    box = [(0.0, 2 * math.pi)] if dim == 2 else [(0.0, math.pi)] * (dim - 2) + [(0.0, 2 * math.pi)]
    metric = GasGiantMetric(a_, dim, family, x_max=float(x[-1]), y_box=box)
    return NormalForm(metric, a_, depth, x_hat, omega, x, s, residual)


def radial_conformal_metric(alpha, dim, params, x_max=None):
    """Metric for the JSON family kind ``radial_conformal``.

    params: ``{"R": 1.0, "collar": 0.2, "profile": {"kind": "power",
    "coefficients": [a1, a2, ...]}}`` for c = d^(alpha/2) (1 + sum a_k d^k),
    or ``{"kind": "lane_emden", "n_poly": 1.5}`` for c = theta^(1/2).
    """
    R = float(params.get("R", 1.0))
    collar = float(params.get("collar", 0.2))
    prof = params.get("profile", {"kind": "power"})
    kind = prof.get("kind", "power")
    if kind == "power":
        coeffs = [float(v) for v in prof.get("coefficients", [])]

        def c_depth(d):
            return d ** (alpha / 2.0) * (1.0 + sum(ak * d ** (k + 1) for k, ak in enumerate(coeffs)))
    elif kind == "lane_emden":
        le = lane_emden(float(prof["n_poly"]), dim=int(prof.get("dim", 3)))
        R = le.radius
        c_depth = le.sound_speed_depth
    else:
        raise MetricError(f"unknown radial profile kind {kind!r}")
    return normal_form_radial(c_depth, R, dim=dim, alpha=alpha, collar=collar).metric
