"""Moving test functions between the lattice and the continuum.

``sample`` restricts a smooth g to the shifted lattice, f(k) = g(k theta + eta);
``multilinear_extend`` fills in a lattice function cube by cube with the
unique multilinear interpolant. The eta-averaged forms of sampled functions
are computed by tensor Gauss-Legendre quadrature over the shift cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_points, check_eta, check_int, check_positive, check_theta
from .continuum_op import gauss_legendre_cube, mu_B
from .cube_fourier import all_cube_coefficients, character_table
from .discrete_op import mu_A
from .lattice import LatticeBox, LatticeFunction

FD_CHECK_STEP = 1e-6


# -- multilinear extension ----------------------------------------------------


@dataclass
class MultilinearFunction:
    """Piecewise-multilinear extension of a lattice function.

    ``bases`` (M, d) are the cube base multi-indices and ``coeffs`` (M, 2^d)
    their Fourier coefficients. Outside the listed cubes the function is 0
    (Dirichlet boxes); periodic boxes wrap.
    """

    source: LatticeFunction
    bases: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        box = self.source.box
        self._lookup = {tuple(int(v) for v in b): i for i, b in enumerate(self.bases)}
        self._first = box.first if box.periodic else box.first - 1
        self._nbase = box.side if box.periodic else box.side + 1

    @property
    def dim(self):
        return self.source.box.dim

    @property
    def theta(self):
        return self.source.box.theta

    def _local(self, x):
        box = self.source.box
        u = (x - np.asarray(box.eta)) / box.theta
        k = np.floor(u).astype(int)
        return k, u - k

    def _row_index(self, k):
        idx = k - self._first
        if self.source.box.periodic:
            idx = idx % self._nbase
            inside = np.ones(len(k), dtype=bool)
        else:
            inside = np.all((idx >= 0) & (idx < self._nbase), axis=1)
        flat = np.ravel_multi_index(tuple(np.clip(idx, 0, self._nbase - 1).T), (self._nbase,) * self.dim)
        return flat, inside

    def evaluate(self, x):
        """g at points ``x`` (trailing axis d)."""
        x = as_points(x, self.dim)
        shape = x.shape[:-1]
        pts = x.reshape(-1, self.dim)
        k, t = self._local(pts)
        return self.evaluate_in_cube(pts, k, t).reshape(shape)

    def evaluate_in_cube(self, x, bases, t=None):
        """Evaluate with the polynomial of the given cubes (for face checks)."""
        x = as_points(x, self.dim).reshape(-1, self.dim)
        bases = np.asarray(bases, dtype=int).reshape(-1, self.dim)
        if t is None:
            box = self.source.box
            t = (x - np.asarray(box.eta)) / box.theta - bases
        flat, inside = self._row_index(bases)
        chi = character_table(2.0 * t - 1.0)
        vals = np.einsum("ms,ms->m", chi, self.coeffs[flat])
        return np.where(inside, vals, 0.0)

    def __call__(self, x):
        return self.evaluate(x)


def multilinear_extend(f):
    bases, coeffs = all_cube_coefficients(f)
    return MultilinearFunction(f, bases, coeffs)


class MultilinearExtension(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`multilinear_extend`.

    ``fit(f)`` takes a :class:`LatticeFunction`; ``transform(points)`` returns
    the extension at the points, one value per row.
    """

    def fit(self, X, y=None):
        if not isinstance(X, LatticeFunction):
            raise TypeError("fit expects a LatticeFunction")
        self.extension_ = multilinear_extend(X)
        self.n_features_in_ = X.box.dim
        return self

    def transform(self, X):
        check_is_fitted(self, "extension_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.n_features_in_ == 1 else X.reshape(1, -1)
        if X.shape[-1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[-1]}")
        return self.extension_.evaluate(X)


# -- smooth test functions ----------------------------------------------------


@dataclass(frozen=True)
class SmoothTestFunction:
    """A smooth g with its gradient.

    ``support`` is a pair (lo, hi) of corner points outside of which g is
    negligible (below 1e-17 relative); ``periodic`` functions have period 1
    in every coordinate and their forms are taken over the unit cell.
    """

    name: str
    dim: int
    func: Callable = field(repr=False)
    grad: Callable = field(repr=False)
    support: Optional[tuple] = None
    periodic: bool = False

    def __call__(self, x):
        return self.func(as_points(x, self.dim))

    def gradient(self, x):
        return self.grad(as_points(x, self.dim))

    def check_gradient(self, x, h=FD_CHECK_STEP):
        """Largest gap between ``gradient`` and central differences at ``x``."""
        x = as_points(x, self.dim).reshape(-1, self.dim)
        fd = np.stack(
            [(self.func(x + h * e) - self.func(x - h * e)) / (2 * h) for e in np.eye(self.dim)],
            axis=-1,
        )
        return float(np.max(np.abs(fd - self.grad(x))))


def gaussian_bump(center, width, amplitude=1.0):
    """amplitude * exp(-|x - center|^2 / (2 width^2))."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    width = check_positive(width, "width")
    d = center.size
    reach = width * math.sqrt(2.0 * math.log(1e17 * max(1.0, abs(amplitude))))

    def func(x):
        return amplitude * np.exp(-np.sum((x - center) ** 2, axis=-1) / (2.0 * width**2))

    def grad(x):
        return -(x - center) / width**2 * func(x)[..., None]

    return SmoothTestFunction(f"gaussian(w={width:g})", d, func, grad, (center - reach, center + reach))


def trig_polynomial(terms, dim=1):
    """Sum of a * cos(2 pi <m, x>) + b * sin(2 pi <m, x>) over ``terms`` = [(m, a, b)]."""
    dim = check_int(dim, "dim", 1)
    modes = np.array([np.atleast_1d(m) for m, _, _ in terms], dtype=float).reshape(-1, dim)
    a = np.array([t[1] for t in terms], dtype=float)
    b = np.array([t[2] for t in terms], dtype=float)

    def func(x):
        ph = 2.0 * np.pi * (x @ modes.T)
        return np.cos(ph) @ a + np.sin(ph) @ b

    def grad(x):
        ph = 2.0 * np.pi * (x @ modes.T)
        w = -np.sin(ph) * a + np.cos(ph) * b
        return 2.0 * np.pi * (w @ modes)

    return SmoothTestFunction("trig", dim, func, grad, periodic=True)


def from_callable(func, dim, support=None, periodic=False, h=1e-6, name="callable"):
    """Wrap a user function; the gradient is a central difference with step ``h``."""
    dim = check_int(dim, "dim", 1)

    def grad(x):
        return np.stack([(func(x + h * e) - func(x - h * e)) / (2 * h) for e in np.eye(dim)], axis=-1)

    if support is not None:
        support = tuple(np.atleast_1d(np.asarray(s, dtype=float)) for s in support)
    return SmoothTestFunction(name, dim, func, grad, support, periodic)


def sample(g, theta, eta, box):
    """The lattice function f(k) = g(k theta + eta) on ``box``."""
    theta = check_theta(theta, allow_one=True)
    eta = check_eta(eta, box.dim, theta)
    if not math.isclose(theta, box.theta) or not np.allclose(eta, box.eta):
        box = LatticeBox(box.dim, theta, eta, box.radius, box.boundary, box.period, box.check_commensurate)
    return LatticeFunction(box, g(box.positions().reshape(-1, box.dim)).reshape(box.shape))


# -- eta-averaged forms -------------------------------------------------------


def _sampling_sites(g, theta):
    """Integer sites k covering g, over one period for periodic g."""
    d = g.dim
    if g.periodic:
        m = 1.0 / theta
        if abs(m - round(m)) > 1e-9:
            raise ValueError("periodic test functions need 1/theta to be an integer")
        axis = np.arange(int(round(m)))
        return np.stack(np.meshgrid(*[axis] * d, indexing="ij"), axis=-1).reshape(-1, d)
    if g.support is None:
        raise ValueError("test function needs a support box or periodic=True")
    lo = np.floor(np.asarray(g.support[0]) / theta).astype(int) - 1
    hi = np.ceil(np.asarray(g.support[1]) / theta).astype(int) + 1
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(d)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


@dataclass(frozen=True)
class SamplingForms:
    """eta-averages of ||f||^2, <f, L f>, <f, V f> for f = g sampled at k theta + eta.

    ``per_eta`` holds the three forms at every quadrature shift, in the order
    of ``etas``.
    """

    norm2: float
    lap: float
    pot: float
    etas: np.ndarray = field(repr=False)
    per_eta: np.ndarray = field(repr=False)

    def best_shift(self):
        """Quadrature shift with the smallest Rayleigh quotient (lap + pot) / norm2."""
        ratio = (self.per_eta[:, 1] + self.per_eta[:, 2]) / self.per_eta[:, 0]
        i = int(np.argmin(ratio))
        return self.etas[i], float(ratio[i])


def sampled_forms(g, spec, theta, eta, sites=None):
    """(||f||^2, <f, L f>, <f, V f>) for one shift, f = g(k theta + eta)."""
    d = g.dim
    if sites is None:
        sites = _sampling_sites(g, theta)
    eta = np.asarray(eta, dtype=float).reshape(d)
    pts = sites * theta + eta
    gv = g.func(pts)
    norm2 = float(np.sum(gv**2))
    lap = 0.0
    for e in np.eye(d):
        lap += float(np.sum((g.func(pts + theta * e) - gv) ** 2))
    pot = float(np.sum(spec.eval(pts) * gv**2)) if spec is not None else 0.0
    return norm2, lap, pot


def expected_sampling_forms(g, spec, theta, eta_quad=16):
    """Average the sampled forms over eta uniform on [0, theta]^d.

    Uses ``eta_quad`` Gauss-Legendre points per axis. Edges are counted
    once each, forward along every axis; for periodic g the sites cover one
    period and edges wrap through g's own periodicity.
    """
    theta = check_theta(theta, allow_one=True)
    check_int(eta_quad, "eta_quad", 8)
    d = g.dim
    nodes, weights = gauss_legendre_cube(d, eta_quad)
    etas = theta * 0.5 * (nodes + 1.0)
    weights = weights / 2**d
    sites = _sampling_sites(g, theta)
    per = np.array([sampled_forms(g, spec, theta, eta, sites) for eta in etas])
    if not np.all(np.isfinite(per)):
        raise FloatingPointError("sampled forms are not finite")
    avg = weights @ per
    return SamplingForms(float(avg[0]), float(avg[1]), float(avg[2]), etas, per)


def continuum_forms(g, spec=None, order=16, panels_per_unit=8):
    """||g||^2, ||grad g||^2 and <g, V g> by composite Gauss-Legendre quadrature.

    Periodic g integrate over the unit cell; others over their support box.
    Independent of the lattice, so it can serve as an oracle for the
    sampling identities.
    """
    d = g.dim
    if g.periodic:
        lo, hi = np.zeros(d), np.ones(d)
    else:
        lo, hi = (np.asarray(s, dtype=float) for s in g.support)
    x1, w1 = np.polynomial.legendre.leggauss(order)
    axes, wts = [], []
    for i in range(d):
        npan = max(1, int(math.ceil((hi[i] - lo[i]) * panels_per_unit)))
        edges = np.linspace(lo[i], hi[i], npan + 1)
        a, b = edges[:-1, None], edges[1:, None]
        axes.append((0.5 * (b - a) * x1 + 0.5 * (a + b)).ravel())
        wts.append((0.5 * (b - a) * w1).ravel())
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    w = np.ones(1)
    for wi in wts:
        w = np.multiply.outer(w, wi).ravel()
    w = w.reshape(-1)
    gv = g.func(pts)
    gr = g.grad(pts)
    norm2 = float(w @ gv**2)
    grad2 = float(w @ np.sum(gr**2, axis=-1))
    pot = float(w @ (spec.eval(pts) * gv**2)) if spec is not None else 0.0
    return norm2, grad2, pot


# -- the discrete-below-continuum comparison ----------------------------------


@dataclass(frozen=True)
class ComparisonCheck:
    """mu(A_theta) <= mu(B_theta) (1 + rel_tol) + abs_tol at one theta."""

    theta: float
    mu_A: float
    mu_B: float
    holds: bool
    margin: float
    converged: bool
    irrational: bool = True


def verify_thm11_instance(spec, theta, rel_tol=1e-3, abs_tol=1e-6, tol=1e-9, irrational=True, **kwargs):
    """Compute both ground energies at eta = 0 and compare them.

    The eta = 0 choice is enough because the discrete energy does not depend
    on the shift for irrational theta; ``irrational`` is recorded metadata.
    Extra keyword arguments go to :func:`mu_A`.
    """
    a = mu_A(spec, theta, tol=tol, **kwargs)
    b = mu_B(spec, theta, tol=tol)
    rhs = b.value * (1.0 + rel_tol) + abs_tol
    return ComparisonCheck(
        float(theta), a.value, b.value, bool(a.value <= rhs), float(rhs - a.value), a.converged and b.converged, irrational
    )
