"""The continuum operator B_theta = -theta^2 Laplace + V on the periodic unit
cell, continuum Rayleigh quotients of multilinear test functions, the
Gaussian trial-state upper bound, and power-law slope fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.special import gammaln
from sklearn.base import BaseEstimator

from ._validation import check_int, check_positive, check_theta
from .cube_fourier import aggregate_mk, character_table
from .eigensolve import SymmetricOperator, smallest_eig

DEFAULT_MAX_N = {1: 2**13, 2: 2**7, 3: 2**5}


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridCell:
    """``n`` points per axis on the periodic unit cell [0, 1)^d."""

    dim: int
    n: int = 16

    def __post_init__(self):
        check_int(self.dim, "dim", 1)
        check_int(self.n, "n", 8)

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def size(self):
        return self.n**self.dim

    def points(self):
        axis = np.arange(self.n) * self.h
        return np.stack(np.meshgrid(*[axis] * self.dim, indexing="ij"), axis=-1).reshape(-1, self.dim)

    def refined(self):
        return GridCell(self.dim, 2 * self.n)


def _periodic_second_difference(n):
    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    T = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    T[0, n - 1] = -1.0
    T[n - 1, 0] = -1.0
    return T.tocsr()


def assemble_continuum(spec, theta, cell):
    """Central-difference -theta^2 Laplace + V with periodic wrap on ``cell``."""
    if spec.dim != cell.dim:
        raise ValueError(f"potential is {spec.dim}-dimensional but cell is {cell.dim}-dimensional")
    T = _periodic_second_difference(cell.n) * (theta**2 / cell.h**2)
    eye = sp.identity(cell.n, format="csr")
    lap = sp.csr_matrix((cell.size, cell.size))
    for axis in range(cell.dim):
        term = None
        for j in range(cell.dim):
            factor = T if j == axis else eye
            term = factor if term is None else sp.kron(term, factor, format="csr")
        lap = lap + term
    V = spec.eval(cell.points())
    A = (lap + sp.diags(V, format="csr")).tocsr()
    upper = 4.0 * cell.dim * theta**2 / cell.h**2 + float(np.max(V, initial=0.0))
    return SymmetricOperator(cell.size, A.dot, upper, A)


@dataclass
class ContinuumEnergy:
    """Grid-refined estimate of the continuum ground energy.

    ``value`` is the Richardson-extrapolated estimate; ``raw`` the finest grid
    value. ``history`` holds (n, raw, residual) and ``extrapolated`` the
    Richardson sequence.
    """

    value: float
    raw: float
    converged: bool
    history: list = field(default_factory=list)
    extrapolated: list = field(default_factory=list)
    vector: np.ndarray = field(default=None, repr=False)
    cell: GridCell = None

    def __float__(self):
        return float(self.value)


def mu_B(spec, theta, cell=None, tol=1e-9, max_n=None, eig_tol=1e-10):
    """Ground state energy of B_theta for Z^d-periodic V.

    The ground band bottom of a periodic Schrodinger operator sits at zero
    quasimomentum, so one periodic cell suffices. The grid doubles from
    ``cell`` until two successive Richardson values (4 mu(2n) - mu(n)) / 3
    differ by less than ``tol``; a pair of raw values closer than ``tol`` also
    stops the refinement.
    """
    theta = check_theta(theta, allow_one=True)
    check_positive(tol, "tol")
    d = spec.dim
    if cell is None:
        cell = GridCell(d, 16)
    if max_n is None:
        max_n = DEFAULT_MAX_N.get(d, 16)
    history, rich = [], []
    res = None
    while True:
        res = smallest_eig(assemble_continuum(spec, theta, cell), tol=eig_tol)
        history.append((cell.n, res.value, res.residual))
        if len(history) >= 2:
            rich.append((4.0 * history[-1][1] - history[-2][1]) / 3.0)
            raw_done = abs(history[-1][1] - history[-2][1]) < tol
            rich_done = len(rich) >= 2 and abs(rich[-1] - rich[-2]) < tol
            if raw_done or rich_done:
                return ContinuumEnergy(rich[-1], res.value, res.converged, history, rich, res.vector, cell)
        if 2 * cell.n > max_n:
            value = rich[-1] if rich else res.value
            return ContinuumEnergy(value, res.value, False, history, rich, res.vector, cell)
        cell = cell.refined()


# -- continuum Rayleigh quotient of multilinear functions ---------------------


@dataclass(frozen=True)
class ContinuumRayleigh:
    """theta^2 ||grad g||^2, <g, V g> and ||g||^2 for one test function."""

    grad2: float
    pot: float
    norm2: float

    @property
    def quotient(self):
        return (self.grad2 + self.pot) / self.norm2


def gauss_legendre_cube(dim, order):
    """Tensor Gauss-Legendre nodes on [-1, 1]^d and weights (summing to 2^d)."""
    x, w = np.polynomial.legendre.leggauss(check_int(order, "quad_order", 1))
    nodes = np.stack(np.meshgrid(*[x] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
    weights = np.prod(np.stack(np.meshgrid(*[w] * dim, indexing="ij"), axis=-1).reshape(-1, dim), axis=1)
    return nodes, weights


def cube_potential_integrals(bases, coeffs, spec, theta, eta, quad_order=8):
    """int_{cube} V g^2 for each cube, by tensor Gauss-Legendre quadrature."""
    d = bases.shape[1]
    nodes, weights = gauss_legendre_cube(d, quad_order)
    chi = character_table(nodes)  # (q, 2^d)
    gvals = coeffs @ chi.T  # (M, q)
    eta = np.asarray(eta, dtype=float).reshape(d)
    pts = (bases[:, None, :] + 0.5 * (1.0 + nodes[None, :, :])) * theta + eta
    V = spec.eval(pts.reshape(-1, d)).reshape(gvals.shape)
    return (theta / 2.0) ** d * np.sum(V * gvals**2 * weights[None, :], axis=1)


def rayleigh_multilinear(g, spec, theta=None, quad_order=8):
    """Continuum Rayleigh pieces of a multilinear extension ``g``.

    ``norm2`` and ``grad2`` are exact, from the level sums m_k of the
    underlying lattice function; ``pot`` uses tensor Gauss-Legendre
    quadrature of V g^2 on every cube. ``theta`` defaults to (and must
    match) the lattice spacing of ``g``.
    """
    box = g.source.box
    if theta is None:
        theta = box.theta
    elif not math.isclose(theta, box.theta, rel_tol=0, abs_tol=1e-15):
        raise ValueError(f"theta {theta!r} does not match the lattice spacing {box.theta!r}")
    check_int(quad_order, "quad_order", 4)
    agg = aggregate_mk(g.source)
    norm2 = agg.norm2_g(theta)
    if norm2 <= 0:
        raise ValueError("test function has empty support")
    grad2 = theta**2 * agg.dirichlet_g(theta)
    pot = float(np.sum(cube_potential_integrals(g.bases, g.coeffs, spec, theta, box.eta, quad_order)))
    return ContinuumRayleigh(grad2, pot, norm2)


# -- Gaussian trial-state bound -----------------------------------------------


@dataclass(frozen=True)
class GaussianBound:
    """Gaussian trial-state upper bound on mu(B_theta) for V = H |x|^p near a well.

    ``value`` is the minimum over sigma of the trial energy
    d theta^2 / (2 sigma^2) + H Gamma((p+d)/2) / Gamma(d/2) sigma^p, attained
    at ``sigma``. ``printed`` is the closed form as it is usually quoted,
    (2d/p) ((p/d) 2^{(d-2)/2} H ((p+d-2)/2)! / ((d-2)/2)!)^{2/(p+2)} theta^{2p/(p+2)};
    ``printed_sigma_min`` is the numeric minimum of the pre-minimization
    expression that goes with it.
    """

    value: float
    sigma: float
    printed: float
    printed_sigma_min: float
    exponent: float


def gaussian_moment_factor(p, d):
    """Gamma((p+d)/2) / Gamma(d/2): E|x|^p for the density (pi sigma^2)^{-d/2} e^{-|x|^2/sigma^2}, over sigma^p."""
    return math.exp(gammaln((p + d) / 2.0) - gammaln(d / 2.0))


def _factorial(z):
    return math.exp(gammaln(z + 1.0))


def gaussian_trial_energy(sigma, H, p, d, theta):
    return 0.5 * d * theta**2 / sigma**2 + H * gaussian_moment_factor(p, d) * sigma**p


def printed_trial_energy(sigma, H, p, d, theta):
    """The pre-minimization expression with the 2^{(p+d)/2} prefactor."""
    G = _factorial((p + d - 2) / 2.0) / _factorial((d - 2) / 2.0)
    return 0.5 * d * theta**2 / sigma**2 + 2.0 ** ((p + d) / 2.0) * H * G * sigma**p


def _minimize_positive(fun, guess):
    # minimize over log sigma so the search stays positive and well scaled
    res = minimize_scalar(
        lambda s: fun(math.exp(s)),
        bracket=(math.log(guess) - 1.0, math.log(guess) + 1.0),
        method="brent",
        tol=1e-14,
    )
    return math.exp(res.x), float(res.fun)


def gaussian_upper_bound(H, p, d, theta):
    H = check_positive(H, "H")
    p = check_int(p, "p", 2)
    if p % 2:
        raise ValueError(f"p must be even, got {p}")
    d = check_int(d, "d", 1)
    theta = check_positive(theta, "theta")
    G = gaussian_moment_factor(p, d)
    sigma = (d * theta**2 / (p * H * G)) ** (1.0 / (p + 2))
    value = gaussian_trial_energy(sigma, H, p, d, theta)
    Gp = _factorial((p + d - 2) / 2.0) / _factorial((d - 2) / 2.0)
    printed = (2.0 * d / p) * ((p / d) * 2.0 ** ((d - 2) / 2.0) * H * Gp) ** (2.0 / (p + 2)) * theta ** (
        2.0 * p / (p + 2)
    )
    _, printed_min = _minimize_positive(lambda s: printed_trial_energy(s, H, p, d, theta), sigma)
    return GaussianBound(value, sigma, printed, printed_min, 2.0 * p / (p + 2))


# -- slope fits -----------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    thetas: tuple
    values: tuple
    bracket: tuple
    within: bool
    note: str = ""


def exponent_bracket(p, d):
    """Exponent range allowed for mu(B_theta) ~ theta^s by the scaling bounds."""
    upper = 2.0 * p / (p + 2)
    lower = 2.0 * p / (p + 1) if d <= 2 else upper
    return (upper, lower)


def slope_fit_muB(spec, thetas, cell=None, tol=1e-10, p=None, margin=0.1, **kwargs):
    """Least-squares slope of log mu(B_theta) against log theta.

    Needs at least four theta values spanning a factor of ten. ``p`` is the
    critical point order (defaults to the coercivity P of ``spec``); the
    returned bracket is [2p/(p+2), 2p/(p+1)] for d <= 2 and the single
    exponent 2p/(p+2) for d >= 3. ``within`` tests the bracket widened by
    ``margin`` on both sides.
    """
    thetas = np.asarray(sorted(float(t) for t in thetas))
    if thetas.size < 4:
        raise ValueError(f"slope fit needs at least 4 theta values, got {thetas.size}")
    if thetas[-1] / thetas[0] < 10.0 * (1 - 1e-12):
        raise ValueError("theta values must span at least a decade")
    vals = []
    for t in thetas:
        res = mu_B(spec, t, cell, tol=tol, **kwargs)
        if not res.converged:
            raise NotConvergedError(f"continuum energy did not converge at theta={t!r}")
        if res.value <= 0:
            raise ValueError(f"continuum energy {res.value!r} at theta={t!r} is not positive; slope undefined")
        vals.append(res.value)
    slope, intercept = np.polyfit(np.log(thetas), np.log(vals), 1)
    if p is None:
        if spec.coercivity is None:
            raise ValueError("critical point order p unknown; pass p explicitly")
        p = spec.coercivity.P
    lo, hi = exponent_bracket(p, spec.dim)
    note = "" if spec.dim <= 2 else "d >= 3: upper and lower exponents coincide"
    within = lo - margin <= slope <= hi + margin
    return SlopeFit(float(slope), float(intercept), tuple(thetas), tuple(vals), (lo, hi), bool(within), note)


class ContinuumGroundState(BaseEstimator):
    """Estimator wrapper around :func:`mu_B`; ``fit(potential)`` sets ``energy_``."""

    def __init__(self, theta=0.5, n_start=16, tol=1e-9, max_n=None):
        self.theta = theta
        self.n_start = n_start
        self.tol = tol
        self.max_n = max_n

    def fit(self, potential, y=None):
        res = mu_B(potential, self.theta, GridCell(potential.dim, self.n_start), tol=self.tol, max_n=self.max_n)
        if not res.converged:
            warnings.warn(f"continuum energy did not converge at theta={self.theta!r}", RuntimeWarning, stacklevel=2)
        self.energy_ = res.value
        self.raw_energy_ = res.raw
        self.history_ = res.history
        self.converged_ = res.converged
        self.vector_ = res.vector
        self.cell_ = res.cell
        return self
