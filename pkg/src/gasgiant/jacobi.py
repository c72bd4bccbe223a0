"""Jacobi fields, conjugate point detection and a simplicity certificate.

Jacobi fields are integrated in the rescaled first-order form

    W1 = J,  W2 = J' / s,   W1' = s W2,   W2' = -F W2 - G W1

with s = x^alpha for gas-giant metrics (s = 1 for ordinary metrics),
F = (s'/s) I + 2 Gamma(gamma'), G = (d Gamma)(gamma', gamma') / s.  The
geodesic itself is carried along through Hamilton's equations in the
coordinate form z' = g^-1 p, p_k' = (1/2) v^T (d_k g) v.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .metric import GasGiantMetric, FlatFamily
from .errors import FlowError
from . import flow as _flow


def _conformal_flat_jet(metric, z):
    # exact Christoffels for g = x^-alpha * scale * I: Gamma^k_ij =
    # d_ki phi_j + d_kj phi_i - d_ij phi_k with phi = -(alpha/2) log x
    n, a, x = metric.dim, metric.alpha, z[0]
    phi = np.zeros(n)
    phi[0] = -a / (2.0 * x)
    dphi = np.zeros((n, n))
    dphi[0, 0] = a / (2.0 * x * x)
    I = np.eye(n)
    G = (np.einsum("ki,j->kij", I, phi) + np.einsum("kj,i->kij", I, phi)
         - np.einsum("ij,k->kij", I, phi))
    dG = (np.einsum("ki,jp->pkij", I, dphi) + np.einsum("kj,ip->pkij", I, dphi)
          - np.einsum("ij,kp->pkij", I, dphi))
    g = metric.family.scale * x ** (-a) * I
    dg = np.zeros((n, n, n))
    dg[0] = -a / x * g
    return g, dg, G, dG


def _geometry(metric, z):
    if isinstance(metric, GasGiantMetric) and type(metric.family) is FlatFamily:
        return _conformal_flat_jet(metric, z)
    jet = metric.jet(z, order=2, check=False)
    return jet.g, jet.dg, jet.christoffel, jet.dchristoffel


def _scale(metric, z, zdot):
    if isinstance(metric, GasGiantMetric):
        a, x = metric.alpha, z[0]
        s = x ** a
        return s, a * x ** (a - 1.0) * zdot[0]
    return 1.0, 0.0


def jacobi_coefficients(metric, z, zdot):
    """F and G of the rescaled Jacobi system at base point z with velocity zdot."""
    g, dg, G, dG = _geometry(metric, z)
    s, sdot = _scale(metric, z, zdot)
    n = len(z)
    F = (sdot / s) * np.eye(n) + 2.0 * np.einsum("ijk,j->ik", G, zdot)
    Gm = np.einsum("kijl,j,l->ik", dG, zdot, zdot) / s
    return F, Gm, s


def _flat_coefficients(metric, z, p):
    # closed forms for g = c x^-alpha I: with phi = -(alpha/2) log x,
    # Gamma(v) W = v phi(W) + W phi(v) - <v, W> grad phi and
    # (d Gamma)(v, v) J = 2 v phi''(v, J) - |v|^2 phi'' J
    n, a, x = metric.dim, metric.alpha, z[0]
    c = metric.family.scale
    s = x ** a
    v = (s / c) * p
    f = -a / (2.0 * x)
    d = a / (2.0 * x * x)
    pdot = np.zeros(n)
    pdot[0] = -(a / (2.0 * x)) * (p @ v)
    gamma_v = f * (v[0] * np.eye(n))
    gamma_v[:, 0] += f * v
    gamma_v[0, :] -= f * v
    sdot = a * x ** (a - 1.0) * v[0]
    F = (sdot / s) * np.eye(n) + 2.0 * gamma_v
    G = np.zeros((n, n))
    G[:, 0] = 2.0 * d * v[0] * v
    G[0, 0] -= d * (v @ v)
    return v, pdot, F, G / s, s


def _coefficients(metric, z, p):
    if isinstance(metric, GasGiantMetric) and type(metric.family) is FlatFamily:
        return _flat_coefficients(metric, z, p)
    g, dg, G, dG = _geometry(metric, z)
    v = np.linalg.solve(g, p)
    s, sdot = _scale(metric, z, v)
    n = len(z)
    F = (sdot / s) * np.eye(n) + 2.0 * np.einsum("ijk,j->ik", G, v)
    Gm = np.einsum("kijl,j,l->ik", dG, v, v) / s
    pdot = 0.5 * np.einsum("a,kab,b->k", v, dg, v)
    return v, pdot, F, Gm, s


def _rhs_factory(metric, n, k, with_bound):
    def rhs(t, u):
        z = u[:n]
        p = u[n:2 * n]
        v, pdot, F, Gm, s = _coefficients(metric, z, p)
        W1 = u[2 * n:2 * n + n * k].reshape(n, k)
        W2 = u[2 * n + n * k:2 * n + 2 * n * k].reshape(n, k)
        out = np.empty_like(u)
        out[:n] = v
        out[n:2 * n] = pdot
        out[2 * n:2 * n + n * k] = (s * W2).ravel()
        out[2 * n + n * k:2 * n + 2 * n * k] = (-F @ W2 - Gm @ W1).ravel()
        if with_bound:
            # Frobenius norm of A = [[0, s I], [-G, -F]] bounds its operator norm
            out[-1] = math.sqrt(n * s * s + np.sum(Gm * Gm) + np.sum(F * F))
        return out
    return rhs


@dataclass
class JacobiSolution:
    t: np.ndarray
    z: np.ndarray          # base points, shape (T, n)
    v: np.ndarray          # velocities
    J: np.ndarray          # shape (T, n, k)
    Jdot: np.ndarray
    W2: np.ndarray
    log_gronwall: np.ndarray   # integral of |A| dt; |W(t)| <= |W(0)| exp(this)
    dense: object = None

    def state_at(self, t):
        return self.dense(t)


def _phase_to_coords(metric, state):
    """(x, y, xi, eta) -> (z, p); the covector p = (xi, eta) is already coordinate."""
    n = metric.dim
    s = np.asarray(state, float)
    return s[:n].copy(), s[n:2 * n].copy()


def jacobi_solve(metric, z0, p0, J0, Jdot0, t_end, stop_x=None, rtol=1e-10, atol=1e-12,
                 max_step=np.inf):
    """Integrate the geodesic (z0, p0) together with Jacobi fields J0, Jdot0.

    Parameters
    ----------
    z0, p0 : array_like
        Base point and covector (p = g v).
    J0, Jdot0 : array_like, shape (n,) or (n, k)
        Initial Jacobi data, in coordinates.
    t_end : float
        Final time.
    stop_x : float, optional
        For gas-giant metrics, stop once the geodesic descends below x = stop_x.
    """
    n = len(z0)
    J0 = np.asarray(J0, float).reshape(n, -1)
    Jdot0 = np.asarray(Jdot0, float).reshape(n, -1)
    k = J0.shape[1]
    z0 = np.asarray(z0, float)
    g0 = metric.metric_tensor(z0)
    v0 = np.linalg.solve(g0, p0)
    s0, _ = _scale(metric, z0, v0)
    u0 = np.concatenate([z0, p0, J0.ravel(), (Jdot0 / s0).ravel(), [0.0]])
    events = None
    if stop_x is not None:
        def low(t, u):
            return u[0] - stop_x
        low.terminal = True
        low.direction = -1
        events = low
    sol = solve_ivp(_rhs_factory(metric, n, k, True), (0.0, t_end), u0, method="DOP853",
                    rtol=rtol, atol=atol, events=events, dense_output=True, max_step=max_step)
    if sol.status == -1:
        raise FlowError(f"Jacobi integration failed: {sol.message}")
    T = sol.t.size
    z = sol.y[:n].T
    p = sol.y[n:2 * n].T
    W1 = sol.y[2 * n:2 * n + n * k].T.reshape(T, n, k)
    W2 = sol.y[2 * n + n * k:2 * n + 2 * n * k].T.reshape(T, n, k)
    v = np.array([np.linalg.solve(metric.metric_tensor(zz), pp) for zz, pp in zip(z, p)])
    s = np.array([_scale(metric, zz, vv)[0] for zz, vv in zip(z, v)])
    Jdot = W2 * s[:, None, None]
    return JacobiSolution(sol.t, z, v, W1, Jdot, W2, sol.y[-1], sol.sol)


def jacobi_direct(metric, z0, p0, J0, Jdot0, t_end, rtol=1e-10, atol=1e-12):
    """Second-order Jacobi equation J'' = -2 Gamma(v, J') - (d Gamma)(v, v) J, unscaled.

    Independent of the rescaled system; used to cross-check it away from
    the boundary.
    """
    n = len(z0)
    J0 = np.asarray(J0, float).reshape(n, -1)
    Jdot0 = np.asarray(Jdot0, float).reshape(n, -1)
    k = J0.shape[1]

    def rhs(t, u):
        z, p = u[:n], u[n:2 * n]
        g, dg, G, dG = _geometry(metric, z)
        v = np.linalg.solve(g, p)
        J = u[2 * n:2 * n + n * k].reshape(n, k)
        Jd = u[2 * n + n * k:].reshape(n, k)
        Jdd = -2.0 * np.einsum("ijk,j,kc->ic", G, v, Jd) - np.einsum("kijl,j,l,kc->ic", dG, v, v, J)
        return np.concatenate([v, 0.5 * np.einsum("a,kab,b->k", v, dg, v), Jd.ravel(), Jdd.ravel()])

    u0 = np.concatenate([z0, p0, J0.ravel(), Jdot0.ravel()])
    sol = solve_ivp(rhs, (0.0, t_end), u0, method="DOP853", rtol=rtol, atol=atol)
    T = sol.t.size
    return sol.t, sol.y[2 * n:2 * n + n * k].T.reshape(T, n, k), sol.y[2 * n + n * k:].T.reshape(T, n, k)


def covariant_derivative(metric, z, v, J, Jdot):
    """D_t J = J' + Gamma(v, J) for each column of J."""
    _, _, G, _ = _geometry(metric, np.asarray(z, float))
    return Jdot + np.einsum("ijk,j,kc->ic", G, v, J)


def normal_frame(g, v):
    """Orthonormal basis (columns) of the g-orthogonal complement of v."""
    n = len(v)
    basis = [v / math.sqrt(v @ g @ v)]
    for e in np.eye(n):
        w = e.copy()
        for b in basis:
            w = w - (b @ g @ w) * b
        nw = math.sqrt(max(w @ g @ w, 0.0))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == n:
            break
    return np.array(basis[1:]).T


@dataclass
class ConjugateScan:
    times: list          # conjugate times found
    solution: JacobiSolution
    determinant: np.ndarray


def _normal_det(metric, z, v, J):
    g = metric.metric_tensor(z)
    E = normal_frame(g, v)
    return float(np.linalg.det(E.T @ g @ J))


def conjugate_point_scan(metric, z0, p0, t_end, stop_x=None, rtol=1e-10):
    """Conjugate points along the geodesic from (z0, p0) up to ``t_end``.

    Starts the n-1 normal Jacobi fields with J(0) = 0, D_t J(0) = E_b and
    tracks det[g(J_a, E_b(t))] over a moving normal frame; each sign change
    after t = 0 is refined to a conjugate time.
    """
    z0 = np.asarray(z0, float)
    p0 = np.asarray(p0, float)
    n = len(z0)
    g0 = metric.metric_tensor(z0)
    v0 = np.linalg.solve(g0, p0)
    E0 = normal_frame(g0, v0)
    J0 = np.zeros((n, n - 1))
    sol = jacobi_solve(metric, z0, p0, J0, E0, t_end, stop_x=stop_x, rtol=rtol)
    k = n - 1

    def det_at(t):
        u = sol.dense(t)
        z = u[:n]
        v = np.linalg.solve(metric.metric_tensor(z), u[n:2 * n])
        J = u[2 * n:2 * n + n * k].reshape(n, k)
        return _normal_det(metric, z, v, J)

    dets = np.array([_normal_det(metric, z, v, J) for z, v, J in zip(sol.z, sol.v, sol.J)])
    times = []
    # skip the trivial zero at t = 0
    for i in range(1, len(sol.t) - 1):
        if dets[i] == 0.0:
            times.append(float(sol.t[i]))
        elif dets[i] * dets[i + 1] < 0:
            times.append(float(brentq(det_at, sol.t[i], sol.t[i + 1], xtol=1e-13)))
    return ConjugateScan(times, sol, dets)


@dataclass
class SimplicityReport:
    passed: bool
    orbits: int
    conjugate_points: int
    non_exiting: int
    max_gronwall_ratio: float      # max |W(t)| / (|W(0)| exp(int |A|)); must be <= 1
    injective: bool
    witness: dict = field(default_factory=dict)


def simplicity_certificate(metric, n_heights=16, n_angles=16, x_range=None, y0=None,
                           stop_fraction=0.2, t_max=None, n_boundary=16):
    """Numerical evidence that the collar is simple.

    Checks, over a grid of unit-speed starts (heights x_range, angles in the
    y-x plane): every orbit exits within the time budget, no conjugate points
    occur before the orbit gets near the boundary, and the Jacobi data obey
    the Gronwall bound.  Finally the scattering relation restricted to the
    boundary grid must be injective (chords monotone in the covector).
    """
    if not isinstance(metric, GasGiantMetric):
        raise TypeError("simplicity certificate needs a gas-giant metric")
    n, m = metric.dim, metric.m
    lo, hi = x_range if x_range is not None else (0.05 * metric.x_max, 0.5 * metric.x_max)
    y0 = metric.y_box.mean(axis=1) if y0 is None else np.atleast_1d(y0).astype(float)
    heights = np.geomspace(lo, hi, n_heights)
    angles = np.linspace(-math.pi, math.pi, n_angles, endpoint=False) + math.pi / n_angles
    budget = t_max if t_max is not None else 50.0 * _flow.diameter_estimate(metric)
    n_conj = 0
    n_stuck = 0
    worst = 0.0
    witness = {}
    for x0 in heights:
        for th in angles:
            d = np.zeros(n)
            d[0], d[1] = math.cos(th), math.sin(th)
            z0 = np.concatenate([[x0], y0])
            p0 = metric.unit_covector(z0, d)
            # the scan stops on reaching stop_x; running out of time means the
            # orbit did not come back down to the boundary within the budget
            scan = conjugate_point_scan(metric, z0, p0, budget,
                                        stop_x=stop_fraction * min(x0, metric.x_switch))
            if scan.solution.z[-1, 0] > stop_fraction * min(x0, metric.x_switch) * (1 + 1e-9):
                n_stuck += 1
                witness.setdefault("non_exiting", {"x0": float(x0), "angle": float(th),
                                                   "t": float(scan.solution.t[-1])})
                continue
            if scan.times:
                n_conj += len(scan.times)
                witness.setdefault("conjugate", {"x0": float(x0), "angle": float(th),
                                                 "t": scan.times[0]})
            sol = scan.solution
            W = np.concatenate([sol.J.reshape(len(sol.t), -1), sol.W2.reshape(len(sol.t), -1)], axis=1)
            normW = np.linalg.norm(W, axis=1)
            log_ratio = np.log(normW) - math.log(normW[0]) - sol.log_gronwall
            worst = max(worst, float(np.exp(log_ratio.max())))
    injective = True
    if m == 1:
        ys = np.linspace(metric.y_box[0, 0], metric.y_box[0, 1], 3)
        momenta = np.geomspace(0.5, 20.0, n_boundary)
        for yb in ys:
            chords = [_flow.scattering_relation(metric, [yb], [p]).y_out[0] - yb for p in momenta]
            if np.any(np.diff(chords) >= 0):
                injective = False
                witness.setdefault("non_injective", {"y": float(yb)})
    passed = n_conj == 0 and n_stuck == 0 and worst <= 1.0 + 1e-8 and injective
    return SimplicityReport(passed, len(heights) * len(angles), n_conj, n_stuck, worst,
                            injective, witness)
