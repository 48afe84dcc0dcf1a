"""The discrete Schrodinger operator A_{theta,eta} = L + V(k theta + eta) on a
truncated box of theta Z^d, its ground state energy and cube-local forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from ._validation import check_eta, check_int, check_positive, check_theta
from .eigensolve import SymmetricOperator, smallest_eig
from .lattice import LatticeBox, LatticeFunction, corner_offsets, cube_edges

DEFAULT_MAX_RADIUS = {1: 2**14, 2: 2**7, 3: 2**4}


class MonotonicityError(RuntimeError):
    """A larger Dirichlet box produced a larger ground energy."""


def _path_laplacian(side, periodic):
    n = side
    if periodic:
        adj = sp.lil_matrix((n, n))
        for i in range(n):
            adj[i, (i + 1) % n] += 1.0
            adj[(i + 1) % n, i] += 1.0
        adj = adj.tocsr()
    else:
        off = np.ones(n - 1)
        adj = sp.diags([off, off], [1, -1], format="csr")
    return (2.0 * sp.identity(n, format="csr") - adj).tocsr()


def laplacian_matrix(box):
    """Sparse graph Laplacian 2d - sum_{j~k} of the box (row-major sites)."""
    L1 = _path_laplacian(box.side, box.periodic)
    eye = sp.identity(box.side, format="csr")
    L = sp.csr_matrix((box.size, box.size))
    for axis in range(box.dim):
        term = None
        for j in range(box.dim):
            factor = L1 if j == axis else eye
            term = factor if term is None else sp.kron(term, factor, format="csr")
        L = L + term
    return L.tocsr()


def assemble_discrete(spec, box):
    """A_{theta,eta} restricted to ``box`` as a :class:`SymmetricOperator`."""
    if spec.dim != box.dim:
        raise ValueError(f"potential is {spec.dim}-dimensional but box is {box.dim}-dimensional")
    V = spec.eval(box.positions().reshape(-1, box.dim))
    A = (laplacian_matrix(box) + sp.diags(V, format="csr")).tocsr()
    return SymmetricOperator(box.size, A.dot, 4.0 * box.dim + float(spec.sup_norm), A)


def rayleigh_forms(f, spec):
    """(<f, L f>, <f, V f>, ||f||^2) for a lattice function, computed by direct sums."""
    V = spec.eval(f.box.positions().reshape(-1, f.box.dim)).reshape(f.box.shape)
    return f.laplacian_form(), float(np.sum(V * f.values**2)), f.norm2()


@dataclass
class GroundEnergy:
    """A truncated ground-energy estimate and how it was reached."""

    value: float
    converged: bool
    residual: float
    history: list = field(default_factory=list)
    vector: np.ndarray = field(default=None, repr=False)
    box: LatticeBox = None

    def __float__(self):
        return float(self.value)


def _embed(vec, old_box, new_box):
    """Zero-extend a vector from a smaller centred Dirichlet box."""
    out = np.zeros(new_box.shape)
    pad = new_box.radius - old_box.radius
    sl = tuple(slice(pad, pad + old_box.side) for _ in range(new_box.dim))
    out[sl] = vec.reshape(old_box.shape)
    return out.ravel()


def mu_A(
    spec,
    theta,
    eta=None,
    tol=1e-8,
    start_radius=16,
    max_radius=None,
    period=None,
    eig_tol=1e-10,
):
    """Ground state energy of A_{theta,eta} by Dirichlet truncation.

    The radius doubles from ``start_radius`` until two successive estimates
    differ by less than ``tol`` (a heuristic Cauchy rule; no rate is known)
    or ``max_radius`` is passed, in which case the result is flagged as not
    converged. Each box admits the zero-extended minimiser of the previous
    one, so the sequence must be non-increasing; a violation beyond the
    eigensolver tolerance raises :class:`MonotonicityError`.

    With ``period=q`` (valid when ``q * theta`` is an integer) a single
    periodic supercell is solved instead, which is exact for rational theta.
    """
    theta = check_theta(theta, allow_one=True)
    d = spec.dim
    eta = check_eta(eta, d, theta)
    check_positive(tol, "tol")
    if period is not None:
        box = LatticeBox(d, theta, eta, boundary="periodic", period=period)
        res = smallest_eig(assemble_discrete(spec, box), tol=eig_tol)
        return GroundEnergy(res.value, res.converged, res.residual, [(period, res.value, res.residual)], res.vector, box)

    if max_radius is None:
        max_radius = DEFAULT_MAX_RADIUS.get(d, 8)
    N = min(check_int(start_radius, "start_radius", 2), max_radius)
    history = []
    prev = None
    v0 = None
    while True:
        box = LatticeBox(d, theta, eta, N)
        res = smallest_eig(assemble_discrete(spec, box), tol=eig_tol, v0=v0)
        history.append((N, res.value, res.residual))
        if prev is not None:
            slack = 10 * eig_tol + 1e-12 * (1 + abs(prev.value))
            if res.value > prev.value + slack:
                raise MonotonicityError(
                    f"Dirichlet estimate rose from {prev.value!r} (N={N // 2}) to {res.value!r} (N={N})"
                )
            if prev.value - res.value < tol:
                return GroundEnergy(res.value, res.converged, res.residual, history, res.vector, box)
        if 2 * N > max_radius:
            return GroundEnergy(res.value, False, res.residual, history, res.vector, box)
        v0 = _embed(res.vector, box, box.with_radius(2 * N))
        prev = res
        N *= 2


def local_forms(f, spec, y):
    """Cube-local (||f||^2_C, <f, L f>_C, <f, V f>_C) on C(y) = y + {0, theta}^d.

    ``y`` is the integer multi-index of the cube's base site.
    """
    box = f.box
    y = np.asarray(y, dtype=int).reshape(box.dim)
    corners = y[None, :] + corner_offsets(box.dim)
    idx = corners - box.first
    if box.periodic:
        idx = idx % box.side
    elif np.any(idx < 0) or np.any(idx >= box.side):
        raise IndexError(f"cube at {tuple(y)} is not contained in the box")
    vals = f.values[tuple(idx.T)]
    pos = corners * box.theta + np.asarray(box.eta)
    V = spec.eval(pos)
    e = cube_edges(box.dim)
    norm2 = float(np.sum(vals**2))
    lap = float(np.sum((vals[e[:, 0]] - vals[e[:, 1]]) ** 2))
    pot = float(np.sum(V * vals**2))
    return norm2, lap, pot


def eta_grid_points(dim, theta, n):
    axis = np.linspace(0.0, theta, check_int(n, "eta_grid", 2))
    return np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), axis=-1).reshape(-1, dim)


@dataclass
class UnionInf:
    value: float
    eta: np.ndarray
    values: np.ndarray
    converged: bool

    def __float__(self):
        return float(self.value)


def union_spectrum_inf(spec, theta, eta_grid=8, tol=1e-8, period=None, **kwargs):
    """min over a uniform grid of shifts eta in [0, theta]^d of mu(A_{theta,eta})."""
    theta = check_theta(theta, allow_one=True)
    etas = eta_grid_points(spec.dim, theta, eta_grid)
    results = [mu_A(spec, theta, eta, tol=tol, period=period, **kwargs) for eta in etas]
    vals = np.array([r.value for r in results])
    i = int(np.argmin(vals))
    return UnionInf(float(vals[i]), etas[i], vals, all(r.converged for r in results))


def shift_spread(spec, theta, eta_grid, radius):
    """max - min over an eta grid of the ground energy at a fixed Dirichlet radius."""
    vals = []
    for eta in eta_grid_points(spec.dim, theta, eta_grid):
        box = LatticeBox(spec.dim, theta, eta, radius)
        vals.append(smallest_eig(assemble_discrete(spec, box)).value)
    return float(np.max(vals) - np.min(vals))


class DiscreteGroundState(BaseEstimator):
    """Estimator wrapper around :func:`mu_A`.

    ``fit(potential)`` computes the truncated ground state; the fitted
    attributes are ``energy_``, ``vector_``, ``box_``, ``history_`` and
    ``converged_``.
    """

    def __init__(self, theta=0.5, eta=None, tol=1e-8, start_radius=16, max_radius=None, period=None):
        self.theta = theta
        self.eta = eta
        self.tol = tol
        self.start_radius = start_radius
        self.max_radius = max_radius
        self.period = period

    def fit(self, potential, y=None):
        res = mu_A(
            potential,
            self.theta,
            self.eta,
            tol=self.tol,
            start_radius=self.start_radius,
            max_radius=self.max_radius,
            period=self.period,
        )
        self.energy_ = res.value
        self.vector_ = res.vector
        self.box_ = res.box
        self.history_ = res.history
        self.converged_ = res.converged
        self.residual_ = res.residual
        return self

    def lattice_function(self):
        return LatticeFunction(self.box_, self.vector_)


def dirichlet_laplacian_floor(dim, radius):
    """Smallest eigenvalue of the free Dirichlet Laplacian on {-N..N}^d."""
    return dim * (2.0 - 2.0 * math.cos(math.pi / (2 * radius + 2)))
