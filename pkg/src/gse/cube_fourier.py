"""Boolean Fourier analysis on the 2^d corners of lattice cubes.

Corner ``c`` of the cube with base site ``y`` is ``y + bits(c)``; bit ``i``
set means hypercube coordinate ``x_i = +1``. A subset ``S`` of axes is the
bitmask with bit ``i`` set when ``i`` is in ``S``. Coefficients use the
expectation normalization ``F^(S) = 2^-d sum_x F(x) chi_S(x)``, so that
``E[F^2] = sum_S F^(S)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import LatticeBox, LatticeFunction, corner_offsets, cube_edges


@lru_cache(maxsize=None)
def walsh_matrix(dim):
    """chi_S(corner c) as a (2^d, 2^d) array indexed [c, S]."""
    n = 2**dim
    c = np.arange(n)
    # x_i = -1 on the axes where the bit of c is clear
    minus = (~c[:, None] & c[None, :]) & (n - 1)
    W = np.where(subset_sizes(dim)[minus] % 2 == 0, 1.0, -1.0)
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def subset_sizes(dim):
    return np.array([bin(S).count("1") for S in range(2**dim)])


@dataclass(frozen=True)
class CubeCoeffs:
    """Fourier coefficients of f restricted to the cube with base site ``y``."""

    y: tuple
    coeffs: np.ndarray

    @property
    def dim(self):
        return len(self.y)

    def reconstruct(self):
        """Corner values sum_S coeffs(S) chi_S(x), in corner order."""
        return walsh_matrix(self.dim) @ self.coeffs

    def evaluate(self, x):
        """Multilinear polynomial at points ``x`` in [-1, 1]^d."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return character_table(x) @ self.coeffs

    def norm2(self):
        """E[F^2] (Parseval side)."""
        return float(np.sum(self.coeffs**2))

    def dirichlet(self):
        """<F, L F> on the cube graph, 2^{d+1} sum_S |S| F^(S)^2."""
        return float(2 ** (self.dim + 1) * np.sum(subset_sizes(self.dim) * self.coeffs**2))


def character_table(x):
    """chi_S(x) for points ``x`` of shape (m, d); returns (m, 2^d)."""
    m, d = x.shape
    out = np.ones((m, 2**d))
    for S in range(1, 2**d):
        for i in range(d):
            if S >> i & 1:
                out[:, S] *= x[:, i]
    return out


def coefficients_from_corners(F):
    """Rows of corner values (.., 2^d) to rows of coefficients."""
    F = np.asarray(F, dtype=float)
    dim = int(round(np.log2(F.shape[-1])))
    return F @ walsh_matrix(dim) / 2**dim


def cube_coefficients(f, y):
    """Coefficients of f on the cube y + {0, theta}^d (periodic boxes wrap)."""
    box = f.box
    y = np.asarray(y, dtype=int).reshape(box.dim)
    idx = y[None, :] + corner_offsets(box.dim) - box.first
    if box.periodic:
        idx = idx % box.side
    elif np.any(idx < 0) or np.any(idx >= box.side):
        raise IndexError(f"cube at {tuple(y)} is not contained in the box")
    F = f.values[tuple(idx.T)]
    return CubeCoeffs(tuple(int(v) for v in y), coefficients_from_corners(F))


def cube_corner_values(f):
    """Base sites and corner values of every cube that meets f.

    Periodic boxes give the q^d wrapped cubes. Dirichlet boxes give every
    cube with a corner inside the box (f is zero outside), so sums over the
    returned cubes equal sums over all cubes of Z^d.
    Returns ``(bases, F)`` with shapes (M, d) and (M, 2^d).
    """
    box = f.box
    d = box.dim
    if box.periodic:
        arr = f.values
        first = 0
        nbase = box.side
    else:
        arr = f.padded()
        first = box.first - 1
        nbase = box.side + 1
    offs = corner_offsets(d)
    cols = []
    for c in range(2**d):
        if box.periodic:
            shifted = np.roll(arr, tuple(-int(o) for o in offs[c]), axis=tuple(range(d)))
        else:
            shifted = arr[tuple(slice(int(o), int(o) + nbase) for o in offs[c])]
        cols.append(shifted.ravel())
    F = np.stack(cols, axis=-1)
    axis_idx = np.arange(nbase) + first
    bases = np.stack(np.meshgrid(*[axis_idx] * d, indexing="ij"), axis=-1).reshape(-1, d)
    return bases, F


def all_cube_coefficients(f):
    bases, F = cube_corner_values(f)
    return bases, coefficients_from_corners(F)


@dataclass(frozen=True)
class MkAggregates:
    """m_k = sum over cubes and |S| = k of squared coefficients."""

    m: np.ndarray

    @property
    def dim(self):
        return len(self.m) - 1

    def norm2_f(self):
        return float(np.sum(self.m))

    def dirichlet_f(self):
        k = np.arange(self.dim + 1)
        return float(4.0 * np.sum(k * self.m))

    def norm2_g(self, theta):
        k = np.arange(self.dim + 1)
        return float(theta**self.dim * np.sum(3.0 ** (-k) * self.m))

    def dirichlet_g(self, theta):
        """<g, -Laplace g> of the multilinear extension."""
        k = np.arange(self.dim + 1)
        return float(4.0 * theta ** (self.dim - 2) * np.sum(3.0 ** (1 - k) * k * self.m))


def aggregate_mk(f):
    _, C = all_cube_coefficients(f)
    d = f.box.dim
    sq = np.sum(C**2, axis=0)
    sizes = subset_sizes(d)
    return MkAggregates(np.array([sq[sizes == k].sum() for k in range(d + 1)]))


@dataclass(frozen=True)
class NuMeasures:
    bases: np.ndarray
    nu_f: np.ndarray
    nu_g: np.ndarray

    def as_dicts(self):
        keys = [tuple(int(v) for v in b) for b in self.bases]
        return dict(zip(keys, self.nu_f)), dict(zip(keys, self.nu_g))


def nu_measures(f, g=None):
    """Per-cube mass fractions of f (corner sums over 2^d) and of its extension g.

    ``g`` is accepted for interface symmetry; its cube coefficients are
    those of ``f``, which is checked when it is given.
    """
    bases, C = all_cube_coefficients(f)
    if g is not None and not np.allclose(g.coeffs, C, rtol=0, atol=0):
        raise ValueError("g is not the multilinear extension of f")
    d = f.box.dim
    theta = f.box.theta
    sq = C**2
    mass_f = np.sum(sq, axis=1)  # = 2^-d sum over corners of f^2
    total_f = float(np.sum(mass_f))
    mass_g = theta**d * (sq @ 3.0 ** (-subset_sizes(d)))
    total_g = float(np.sum(mass_g))
    if total_f <= 0 or total_g <= 0:
        raise ZeroDivisionError("nu measures need a nonzero function")
    return NuMeasures(bases, mass_f / total_f, mass_g / total_g)


def cube_poincare_gap(f, y):
    """(||f - mean||^2_C, <f, L f>_C) on one cube, both by direct sums."""
    cc = cube_coefficients(f, y)
    F = cc.reconstruct()
    e = cube_edges(len(cc.y))
    lap = float(np.sum((F[e[:, 0]] - F[e[:, 1]]) ** 2))
    return float(np.sum((F - F.mean()) ** 2)), lap


def direct_identities(f):
    """Both sides of the four global identities for a lattice function.

    Returns a dict mapping identity name to ``(direct, fourier)``. The direct
    sides are sums over sites and edges, or exact polynomial integration of
    the extension cube by cube.
    """
    agg = aggregate_mk(f)
    theta = f.box.theta
    direct_g_norm, direct_g_grad = extension_forms_direct(f)
    return {
        "norm_f": (f.norm2(), agg.norm2_f()),
        "dirichlet_f": (f.laplacian_form(), agg.dirichlet_f()),
        "norm_g": (direct_g_norm, agg.norm2_g(theta)),
        "dirichlet_g": (direct_g_grad, agg.dirichlet_g(theta)),
    }


def extension_forms_direct(f):
    """||g||^2 and ||grad g||^2 of the multilinear extension from corner values.

    On each cube g is a tensor product of linear hats, so with corner values
    F the integrals reduce to Kronecker products of the 1-d mass matrix
    theta/6 [[2,1],[1,2]] and stiffness matrix 1/theta [[1,-1],[-1,1]].
    This path never touches the Fourier coefficients.
    """
    bases, F = cube_corner_values(f)
    d = f.box.dim
    theta = f.box.theta
    mass1 = theta / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    stiff1 = 1.0 / theta * np.array([[1.0, -1.0], [-1.0, 1.0]])
    # corner c has bit i <-> axis i, so axis 0 is the fastest index; build the
    # Kronecker product with the last axis first
    M = np.ones((1, 1))
    for _ in range(d):
        M = np.kron(mass1, M)
    K = np.zeros((2**d, 2**d))
    for axis in range(d):
        T = np.ones((1, 1))
        for j in range(d):
            T = np.kron(stiff1 if j == axis else mass1, T)
        K += T
    norm = float(np.einsum("mi,ij,mj->", F, M, F))
    grad = float(np.einsum("mi,ij,mj->", F, K, F))
    return norm, grad


@dataclass(frozen=True)
class IdentityReport:
    dim: int
    count: int
    max_rel_error: float
    worst: str
    passed: bool


def _rel(direct, other):
    scale = max(abs(direct), abs(other), 1e-300)
    return abs(direct - other) / scale


def identity_suite(dim, count=200, seed=0, rtol=1e-12, max_side=None):
    """Check the exact identities on ``count`` random periodic-box functions.

    Each draw picks a period, a lattice spacing theta = 1/period and
    Gaussian values. Besides the four global identities, every cube is
    checked for Parseval (mean square of corners) and for the cube-graph
    Dirichlet form, both summed directly over corners and edges.
    """
    rng = np.random.default_rng(seed)
    max_side = max_side or {1: 12, 2: 6, 3: 4}.get(dim, 3)
    edges = cube_edges(dim)
    worst, worst_name = 0.0, ""
    for _ in range(count):
        q = int(rng.integers(2, max_side + 1))
        box = LatticeBox(dim, 1.0 / q, boundary="periodic", period=q)
        f = LatticeFunction(box, rng.standard_normal(box.shape))
        checks = {k: _rel(*v) for k, v in direct_identities(f).items()}
        _, F = cube_corner_values(f)
        C = coefficients_from_corners(F)
        parseval = np.mean(F**2, axis=1)
        graph = np.sum((F[:, edges[:, 0]] - F[:, edges[:, 1]]) ** 2, axis=1)
        cube_dir = 2 ** (dim + 1) * (C**2 @ subset_sizes(dim))
        # per-cube errors relative to the cube's own energy
        checks["cube_parseval"] = float(np.max(np.abs(parseval - np.sum(C**2, axis=1)) / np.maximum(parseval, 1e-300)))
        checks["cube_dirichlet"] = float(np.max(np.abs(graph - cube_dir) / np.maximum(graph, 1e-300)))
        name, err = max(checks.items(), key=lambda kv: kv[1])
        if err > worst:
            worst, worst_name = err, name
    return IdentityReport(dim, count, worst, worst_name, bool(worst <= rtol))
