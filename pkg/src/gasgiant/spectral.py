"""Indicial data and truncated Dirichlet eigenvalues of the degenerate Laplacian.

After separating a cross-section mode with eigenvalue mu, the operator acts
on radial profiles as

    L u = x^alpha u'' - alpha (n/2 - 1) x^(alpha-1) u' - mu x^alpha u,

which is symmetric for the weight w = x^(-n alpha/2): L u = (p u')'/w - mu x^alpha u
with flux coefficient p = x^(alpha - n alpha/2).  Eigenvalues of -L with
Dirichlet conditions at x = eps and x = 1 are computed two ways: a
conservative finite-difference scheme on a graded grid, and shooting in
t = log x, where the equation reads

    u_tt - gamma_+ u_t + e^((2-alpha) t) (lambda - mu e^(alpha t)) u = 0.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import diags
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.optimize import brentq
from scipy.special import jn_zeros

from .errors import ConvergenceError, FitError, MetricError
from .fitting import fit_loglog
from .metric import volume_weight_exponent


def _exact(v):
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass
class IndicialData:
    alpha: float
    n: int
    gamma_minus: float
    gamma_plus: float
    mu_minus: float
    mu_plus: float
    essentially_self_adjoint: bool
    exact: dict = field(default_factory=dict, repr=False)

    @property
    def roots(self):
        return (self.gamma_minus, self.gamma_plus)

    @property
    def cutoff_window(self):
        return (self.mu_minus, self.mu_plus)


def indicial_data(alpha, n):
    """Indicial roots, L^2 cutoff window and essential self-adjointness.

    The roots of gamma^2 - (alpha (n/2 - 1) + 1) gamma = 0 are 0 and
    gamma_+ = alpha (n/2 - 1) + 1; the weight cutoff window is
    [mu_-, mu_+] = [(n alpha/2 - 1)/2, (n alpha/2 - 1)/2 + 2 - alpha].
    Arithmetic is exact (on the binary value of alpha), so the two
    midpoints agree exactly.
    """
    a = _exact(alpha)
    if not 0 < a < 2:
        raise MetricError(f"alpha={float(a)} outside (0, 2)")
    if int(n) != n or n < 2:
        raise MetricError("n must be an integer >= 2")
    n = int(n)
    gm = Fraction(0)
    gp = a * (Fraction(n, 2) - 1) + 1
    mm = (n * a / 2 - 1) / 2
    mp = mm + 2 - a
    esa = a > Fraction(2, n)
    exact = {"gamma_minus": gm, "gamma_plus": gp, "mu_minus": mm, "mu_plus": mp,
             "midpoint_roots": (gm + gp) / 2, "midpoint_window": (mm + mp) / 2}
    return IndicialData(float(a), n, float(gm), float(gp), float(mm), float(mp), bool(esa), exact)


@dataclass
class TruncatedEigenproblem:
    alpha: float
    n: int
    mu: float = 0.0
    eps: float = 1e-3
    N: int = 2000
    x_top: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise MetricError("alpha outside (0, 2)")
        if not 0 < self.eps < self.x_top:
            raise MetricError("need 0 < eps < x_top")
        if self.mu < 0:
            raise MetricError("mode eigenvalue must be non-negative")
        if self.N < 8:
            raise MetricError("grid too coarse")

    @property
    def gamma_plus(self):
        return self.alpha * (self.n / 2.0 - 1.0) + 1.0

    def grid(self):
        """x_i = eps + (x_top - eps) (i/N)^3, graded toward the wall."""
        s = np.arange(self.N + 1) / self.N
        return self.eps + (self.x_top - self.eps) * s ** 3

    def weight(self, x):
        return np.asarray(x, float) ** volume_weight_exponent(self.alpha, self.n)

    def flux(self, x):
        return np.asarray(x, float) ** (self.alpha + volume_weight_exponent(self.alpha, self.n))


@dataclass
class RadialOperator:
    """Dirichlet discretization  -L_h = W^-1 S  on the interior nodes."""

    x: np.ndarray           # all nodes, including the two walls
    S_diag: np.ndarray
    S_off: np.ndarray
    W: np.ndarray           # lumped weights on the interior nodes
    mass: np.ndarray        # mu x^alpha w, lumped, interior nodes

    def apply(self, u_full):
        """L_h u at interior nodes for a vector given on all nodes (walls included)."""
        u = np.asarray(u_full, float)
        x = self.x
        m = 0.5 * (x[1:] + x[:-1])
        flux = self._p(m) * np.diff(u) / np.diff(x)
        return (np.diff(flux) - self.mass * u[1:-1]) / self.W

    def matrix_dense(self):
        S = np.diag(self.S_diag) + np.diag(self.S_off, 1) + np.diag(self.S_off, -1)
        return S

    def symmetry_residual(self, rng=None, trials=4):
        """max |<L u, v>_W - <u, L v>_W| / (|u|_W |v|_W |L|) over random vectors."""
        rng = np.random.default_rng(0) if rng is None else rng
        worst = 0.0
        n = self.W.size
        for _ in range(trials):
            u, v = rng.standard_normal(n), rng.standard_normal(n)
            Lu, Lv = -self._mul(u) / self.W, -self._mul(v) / self.W
            a = np.dot(Lu * self.W, v)
            b = np.dot(u * self.W, Lv)
            scale = (np.abs(Lu * self.W).sum() * np.abs(v).max()
                     + np.abs(Lv * self.W).sum() * np.abs(u).max())
            worst = max(worst, abs(a - b) / scale)
        return worst

    def _mul(self, u):
        out = self.S_diag * u
        out[:-1] += self.S_off * u[1:]
        out[1:] += self.S_off * u[:-1]
        return out


def assemble_radial(problem):
    """Conservative second-order discretization of L with Dirichlet walls.

    Flux differences p(m_{i+1/2}) (u_{i+1} - u_i)/dx at cell midpoints give a
    symmetric stiffness S; the lumped weight
    W_i = w(x_i) (p(m_{i+1/2}) - p(m_{i-1/2})) / p'(x_i)  (or w(x_i) times the
    dual cell length when p is constant) makes the scheme exact on linear
    functions.  Then -L_h = W^-1 S is symmetric in the W inner product.
    """
    pr = problem
    x = pr.grid()
    m = 0.5 * (x[1:] + x[:-1])
    pm = pr.flux(m)
    c = pm / np.diff(x)              # conductances of the N cells
    diag = c[:-1] + c[1:]
    off = -c[1:-1]
    xi = x[1:-1]
    q = pr.alpha + volume_weight_exponent(pr.alpha, pr.n)
    if q == 0:
        W = pr.weight(xi) * (m[1:] - m[:-1])
    else:
        dp = q * xi ** (q - 1.0)
        W = pr.weight(xi) * (pm[1:] - pm[:-1]) / dp
    mass = pr.mu * xi ** pr.alpha * W
    op = RadialOperator(x, diag + mass, off, W, mass)
    op._p = pr.flux
    return op


def fd_eigenvalues(problem, k=5):
    """k smallest Dirichlet eigenvalues of S u = lambda W u by shift-invert at 0.

    The graded grid makes the matrix norm huge near the wall, so the small
    eigenvalues are taken from the inverse operator rather than by bisection.
    """
    op = assemble_radial(problem)
    S = diags([op.S_off, op.S_diag, op.S_off], [-1, 0, 1], format="csc")
    M = diags(op.W, 0, format="csc")
    try:
        vals = eigsh(S, k=k, M=M, sigma=0.0, which="LM", return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    return np.sort(vals), op


def _shoot(problem, lam, t0, u0, ut0, dense=False):
    a, mu, gp = problem.alpha, problem.mu, problem.gamma_plus

    def rhs(t, s):
        return [s[1], gp * s[1] - math.exp((2.0 - a) * t) * (lam - mu * math.exp(a * t)) * s[0]]

    return solve_ivp(rhs, (t0, math.log(problem.x_top)), [u0, ut0], method="DOP853",
                     rtol=1e-13, atol=1e-300, dense_output=dense, first_step=1e-4)


def _start(problem, lam, eps):
    """Initial data at t = log eps: Dirichlet wall, or the regular branch if eps is None."""
    if eps is not None:
        return math.log(eps), 0.0, 1.0
    # limit problem: u = x^gamma_+ (1 + a1 x^(2-alpha)) with the leading correction
    a, gp = problem.alpha, problem.gamma_plus
    x0 = 1e-12 ** (1.0 / (2.0 - a))
    a1 = -lam / ((2.0 - a) * (gp + 2.0 - a))
    c = a1 * x0 ** (2.0 - a)
    u0 = 1.0 + c
    ut0 = gp + (gp + 2.0 - a) * c
    return math.log(x0), u0, ut0


def _zeros(sol):
    u = sol.y[0]
    # the final sample sits on the far wall and is excluded
    return int(np.sum(np.signbit(u[1:-2]) != np.signbit(u[2:-1]))) if u.size > 3 else 0


def shooting_eigenvalue(problem, j, guess, eps="problem", rel_bracket=0.05):
    """j-th Dirichlet eigenvalue by shooting in t = log x, refined from a guess.

    eps=None solves the limit problem on (0, x_top] with the regular branch
    u ~ x^gamma_+ at x = 0 (the Dirichlet extension).
    """
    e = problem.eps if eps == "problem" else eps
    t0 = None

    def miss(lam):
        t0, u0, ut0 = _start(problem, lam, e)
        sol = _shoot(problem, lam, t0, u0, ut0)
        if not sol.success:
            raise ConvergenceError(sol.message)
        return sol.y[0, -1]

    lo, hi = guess * (1 - rel_bracket), guess * (1 + rel_bracket)
    flo, fhi = miss(lo), miss(hi)
    grow = 0
    while flo * fhi > 0:
        grow += 1
        if grow > 30:
            raise ConvergenceError(f"no sign change around lambda={guess}")
        lo, hi = max(lo * (1 - rel_bracket), 1e-14), hi * (1 + rel_bracket)
        flo, fhi = miss(lo), miss(hi)
    lam = brentq(miss, lo, hi, xtol=1e-15 * max(1.0, abs(guess)), rtol=1e-15, maxiter=200)
    t0, u0, ut0 = _start(problem, lam, e)
    sol = _shoot(problem, lam, t0, u0, ut0)
    if _zeros(sol) != j - 1:
        raise ConvergenceError(f"shooting converged to a root with {_zeros(sol)} interior "
                               f"zeros, expected {j - 1}")
    return lam


@dataclass
class EigenTable:
    alpha: float
    n: int
    mu: float
    eps: np.ndarray
    values: np.ndarray          # values[i, j-1] = lambda_j(eps_i)
    limit: np.ndarray           # lambda_j of the limit problem (shooting from x = 0)
    richardson: np.ndarray      # two smallest eps, theoretical exponent
    grid_N: int
    sym_residual: float
    exponents: np.ndarray = None

    def rows(self):
        out = []
        for i, e in enumerate(self.eps):
            for j in range(self.values.shape[1]):
                out.append((self.alpha, self.n, self.mu, float(e), j + 1,
                            float(self.values[i, j]), self.grid_N, self.sym_residual))
        return out


def eigenvalues_truncated(problem, k=5):
    """k smallest Dirichlet eigenvalues on [eps, x_top], finite-difference guess refined by shooting."""
    if k > 20:
        raise MetricError("k <= 20")
    guesses, op = fd_eigenvalues(problem, k)
    vals = np.array([shooting_eigenvalue(problem, j + 1, g) for j, g in enumerate(guesses)])
    return vals, guesses, op


def limit_eigenvalues(alpha, n, mu=0.0, k=5, x_top=1.0, N=4000):
    """Eigenvalues of the Dirichlet extension on (0, x_top]."""
    pr = TruncatedEigenproblem(alpha, n, mu, eps=1e-9, N=N, x_top=x_top)
    guesses, _ = fd_eigenvalues(pr, k)
    return np.array([shooting_eigenvalue(pr, j + 1, g, eps=None) for j, g in enumerate(guesses)])


def eigen_table(alpha, n, mu=0.0, eps_ladder=None, k=3, N=2000):
    """lambda_j(eps) over eps = 2^-k ladders, the limit values and a Richardson cross-check."""
    if eps_ladder is None:
        eps_ladder = 2.0 ** -np.arange(4, 15)
    eps = np.sort(np.asarray(eps_ladder, float))[::-1]
    rows, sym = [], 0.0
    for e in eps:
        pr = TruncatedEigenproblem(alpha, n, mu, eps=float(e), N=N)
        vals, _, op = eigenvalues_truncated(pr, k)
        sym = max(sym, op.symmetry_residual())
        rows.append(vals)
    values = np.array(rows)
    limit = limit_eigenvalues(alpha, n, mu, k)
    gp = alpha * (n / 2.0 - 1.0) + 1.0
    r = (eps[-2] / eps[-1]) ** gp
    rich = (r * values[-1] - values[-2]) / (r - 1.0)
    return EigenTable(alpha, n, mu, eps, values, limit, rich, N, sym)


def truncation_rate_fit(table, min_decades=3.0):
    """Per-j log-log slope of |lambda_j(eps) - lambda_j| against eps.

    Raises
    ------
    FitError
        If the ladder spans fewer than ``min_decades`` decades or a
        difference is not positive.
    """
    out = []
    for j in range(table.values.shape[1]):
        d = table.values[:, j] - table.limit[j]
        if np.any(d <= 0):
            raise FitError(f"lambda_{j + 1}(eps) not above its limit on the whole ladder")
        out.append(fit_loglog(table.eps, d, min_decades=min_decades).exponent)
    table.exponents = np.array(out)
    return table.exponents


def bessel_oracle(k):
    """j_{1,k}^2 / 4: eigenvalues of x u'' = -lambda u, u ~ x at 0, u(1) = 0."""
    return jn_zeros(1, k) ** 2 / 4.0


@dataclass
class BoundaryProfile:
    beta: float
    expected: float
    bound_constant: float       # sup |phi| / (x (eps + x)^(gamma_+ - 1)), phi scaled to sup 1
    bound_spread: float         # sup / inf of the same ratio on [2 eps, x_top / 2]
    wall_slope: float           # log-log slope of phi against x - eps on [eps, 2 eps]


def eigenfunction_boundary_profile(problem, j=1, window=None, samples=60):
    """Fit |phi_j| ~ x^beta on [10 eps, 0.1] and check the two-regime bound shape."""
    pr = problem
    window = (10 * pr.eps, 0.1) if window is None else window
    if window[0] < 10 * pr.eps or window[0] >= window[1]:
        raise FitError("fit window collides with the wall")
    guesses, _ = fd_eigenvalues(pr, j)
    lam = shooting_eigenvalue(pr, j, guesses[j - 1])
    t0, u0, ut0 = _start(pr, lam, pr.eps)
    sol = _shoot(pr, lam, t0, u0, ut0, dense=True)

    def phi(x):
        return sol.sol(np.log(x))[0]

    xs = np.geomspace(window[0], window[1], samples)
    beta = fit_loglog(xs, np.abs(phi(xs)), min_decades=1.0).exponent
    gp = pr.gamma_plus
    xb = pr.eps + (pr.x_top - pr.eps) * np.geomspace(1e-9, 1.0, 600)[:-1]
    vals = np.abs(phi(xb))
    vals = vals / vals.max()
    ratio = vals / (xb * (pr.eps + xb) ** (gp - 1.0))
    # the bound is attained up to a constant away from the wall and the far end
    core = (xb >= 2 * pr.eps) & (xb <= 0.5 * pr.x_top)
    xw = pr.eps * (1.0 + np.geomspace(1e-6, 1e-2, 12))
    wall = fit_loglog(xw - pr.eps, np.abs(phi(xw)), min_decades=1.0).exponent
    spread = float(ratio[core].max() / ratio[core].min())
    return BoundaryProfile(beta, gp, float(ratio.max()), spread, wall)
