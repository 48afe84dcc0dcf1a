"""Smallest eigenpair of symmetric positive-semidefinite operators.

Operators are matrix-free (an ``apply`` callback); when a sparse matrix is
attached the solver first brackets the bottom of the spectrum by inertia
bisection and then runs the same Krylov iteration on the inverse shifted
just below it. That is much faster for the long, nearly gapless chains
that show up at large truncation radii.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 2048


class NotConvergedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SymmetricOperator:
    size: int
    apply: Callable[[np.ndarray], np.ndarray]
    upper_bound: float
    matrix: Optional[sp.spmatrix] = None

    @classmethod
    def from_matrix(cls, A, upper_bound=None):
        A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
        if upper_bound is None:
            # Gershgorin
            upper_bound = float(np.max(np.asarray(abs(A).sum(axis=1)).ravel(), initial=0.0))
        return cls(A.shape[0], A.dot, upper_bound, A)


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    residual: float
    converged: bool = True
    iterations: int = 0
    multiplicity: int = 1

    def __float__(self):
        return float(self.value)


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _orthonormalize_against(r, V):
    for _ in range(2):
        r = r - V @ (V.T @ r)
    return r


def _krylov_lowest(apply, n, v0, tol_fn, max_iter, rng, basis=48, keep=8):
    """Thick-restarted Lanczos with full reorthogonalization.

    Returns the lowest Ritz pair of ``apply``. The projected matrix is
    formed from explicit inner products, so restarts and the one injected
    random direction need no special bookkeeping. ``tol_fn(x, ax, theta)``
    decides convergence of a candidate Ritz vector.
    """
    m = min(basis, n)
    keep = min(keep, m - 1) if m > 1 else 0
    V = np.empty((n, m))
    W = np.empty((n, m))
    H = np.zeros((m, m))
    V[:, 0] = v0 / np.linalg.norm(v0)
    k = 0
    iters = 0
    injected = False
    while True:
        for j in range(k, m):
            w = apply(V[:, j])
            iters += 1
            W[:, j] = w
            h = V[:, : j + 1].T @ w
            H[: j + 1, j] = h
            H[j, : j + 1] = h
            if j + 1 < m:
                r = _orthonormalize_against(w, V[:, : j + 1])
                beta = np.linalg.norm(r)
                if beta <= 1e-12 * max(1.0, np.linalg.norm(w)):
                    # invariant subspace found; keep expanding with a random direction
                    r = _orthonormalize_against(rng.standard_normal(n), V[:, : j + 1])
                    beta = np.linalg.norm(r)
                V[:, j + 1] = r / beta
        theta, Y = np.linalg.eigh(H)
        y = Y[:, 0]
        x = V @ y
        ax = W @ y
        if tol_fn(x, ax, theta[0]) or m == n or iters >= max_iter:
            return theta, x, ax, iters
        # restart on the lowest `keep` Ritz vectors plus the Krylov continuation
        r = _orthonormalize_against(ax - theta[0] * x, V @ Y[:, :keep])
        Vk = V @ Y[:, :keep]
        Wk = W @ Y[:, :keep]
        V[:, :keep] = Vk
        W[:, :keep] = Wk
        H[:] = 0.0
        H[:keep, :keep] = np.diag(theta[:keep])
        k = keep
        if not injected and keep + 1 < m:
            z = _orthonormalize_against(rng.standard_normal(n), V[:, :keep])
            V[:, keep] = z / np.linalg.norm(z)
            wz = apply(V[:, keep])
            iters += 1
            W[:, keep] = wz
            hz = V[:, : keep + 1].T @ wz
            H[: keep + 1, keep] = hz
            H[keep, : keep + 1] = hz
            r = _orthonormalize_against(r, V[:, : keep + 1])
            k = keep + 1
            injected = True
        nr = np.linalg.norm(r)
        if nr == 0.0:
            r = _orthonormalize_against(rng.standard_normal(n), V[:, :k])
            nr = np.linalg.norm(r)
        V[:, k] = r / nr


def _factor(A, sigma, symmetric=False):
    n = A.shape[0]
    M = (A - sigma * sp.identity(n, format="csc")).tocsc()
    if symmetric:
        return splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    return splu(M)


def count_below(A, sigma):
    """Number of eigenvalues of symmetric ``A`` below ``sigma`` (Sylvester inertia).

    Uses an LDL^T-like factorization with symmetric ordering and no
    pivoting; returns None when the factorization had to pivot or broke down.
    """
    try:
        lu = _factor(sp.csc_matrix(A), sigma, symmetric=True)
    except RuntimeError:
        return None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    diag = lu.U.diagonal()
    if not np.all(np.isfinite(diag)):
        return None
    return int(np.sum(diag < 0))


def _gershgorin_interval(A, scale):
    absA = abs(A)
    diag = A.diagonal()
    radius = np.asarray(absA.sum(axis=1)).ravel() - np.abs(diag)
    lo = float(np.min(diag - radius)) - 1e-7 * scale
    hi = float(np.max(diag + radius)) + 1e-7 * scale
    return lo, hi


def _bisect_bottom(A, lo, hi, width, max_steps=64):
    """Shrink [lo, hi] around the smallest eigenvalue by inertia bisection.

    Invariant: no eigenvalue below ``lo`` and at least one below ``hi``.
    Stops early (returning the current bracket) if the inertia count is
    unavailable.
    """
    for _ in range(max_steps):
        if hi - lo <= width:
            break
        # an exactly zero pivot breaks the unpivoted factorization, so nudge
        # the midpoint off any such point
        for frac in (0.5, 0.4871, 0.5137):
            mid = lo + frac * (hi - lo)
            c = count_below(A, mid)
            if c is not None:
                break
        if c is None:
            break
        if c == 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


# bracket widths (relative to the spectral scale) tried in turn
BRACKET_WIDTHS = (1e-9, 1e-12, 1e-15)


def _multiplicity(theta, value, tol, scale):
    gap_tol = max(10 * tol, 1e-8 * max(1.0, scale))
    return int(np.sum(np.abs(theta - value) <= gap_tol))


def smallest_eig(op, tol=DEFAULT_TOL, max_iter=20000, v0=None, seed=0, shift_invert="auto"):
    """Smallest eigenvalue and a unit eigenvector of ``op``.

    The iteration is seeded with ``v0`` (all ones by default) and stops once
    the true residual ``||A v - mu v||`` is at most ``tol``. When the
    operator carries a sparse matrix and ``shift_invert`` is ``"auto"`` or
    ``True``, the Krylov iteration runs on ``(A - sigma I)^{-1}`` with sigma
    just below the smallest eigenvalue, and the residual is still measured
    on ``A``.

    Non-convergence emits :class:`NotConvergedWarning` and returns the best
    iterate with ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = op.size
    rng = np.random.default_rng(seed)
    if v0 is None:
        v0 = np.ones(n)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (n,) or not np.any(v0):
        raise ValueError("v0 must be a nonzero vector of length op.size")
    if n == 1:
        val = float(op.apply(np.ones(1))[0])
        return EigResult(val, np.ones(1), 0.0)

    use_si = op.matrix is not None and shift_invert in ("auto", True)
    scale = max(1.0, float(op.upper_bound))

    if use_si:
        A = sp.csc_matrix(op.matrix)
        lo, hi = _gershgorin_interval(A, scale)
        definite = count_below(A, lo) == 0
        best = {}

        def tol_fn(x, ax_inner, theta):
            x = x / np.linalg.norm(x)
            ax = op.apply(x)
            val = float(x @ ax)
            res = float(np.linalg.norm(ax - val * x))
            if "res" not in best or res < best["res"]:
                best["x"], best["ax"], best["val"], best["res"] = x, ax, val, res
            return res <= tol

        iters = 0
        widths = BRACKET_WIDTHS if definite else (None,)
        for stage, w in enumerate(widths):
            if w is not None:
                lo, hi = _bisect_bottom(A, lo, hi, w * scale)
            # stay a little below the bracket so A - sigma is safely definite
            sigma = lo - 0.5 * (hi - lo)
            lu = _factor(A, sigma)
            last = stage == len(widths) - 1
            budget = max_iter - iters if last else min(400, max_iter - iters)
            start = best["x"] if "x" in best else v0
            theta, x, _, used = _krylov_lowest(lambda v: -lu.solve(v), n, start, tol_fn, budget, rng)
            iters += used
            tol_fn(x, None, theta[0])
            if best["res"] <= tol or iters >= max_iter:
                break
        x, ax, val, res = best["x"], best["ax"], best["val"], best["res"]
        # Ritz values of -(A - sigma)^{-1} mapped back to the spectrum of A
        ritz = sigma - 1.0 / theta[theta < 0]
    else:

        def tol_fn(x, ax, theta):
            return np.linalg.norm(ax - theta * x) <= tol

        theta, x, _, iters = _krylov_lowest(op.apply, n, v0, tol_fn, max_iter, rng)
        x = x / np.linalg.norm(x)
        ax = op.apply(x)
        val = float(x @ ax)
        res = float(np.linalg.norm(ax - val * x))
        ritz = theta

    converged = res <= tol
    if not converged:
        warnings.warn(
            f"smallest_eig: residual {res:.3e} > tol {tol:.3e} after {iters} iterations",
            NotConvergedWarning,
            stacklevel=2,
        )
    return EigResult(
        value=val,
        vector=_fix_sign(x),
        residual=res,
        converged=converged,
        iterations=iters,
        multiplicity=max(1, _multiplicity(np.sort(ritz), val, tol, scale)),
    )


def materialize(op):
    """Dense matrix of ``op`` built column by column from ``apply``."""
    n = op.size
    M = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        M[:, j] = op.apply(e)
        e[j] = 0.0
    return M


def dense_eig_oracle(op):
    """Exact smallest eigenpair by a dense symmetric eigensolve (n <= 2048)."""
    if op.size > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}, got {op.size}")
    M = materialize(op)
    M = 0.5 * (M + M.T)
    w, U = np.linalg.eigh(M)
    x = _fix_sign(U[:, 0])
    res = float(np.linalg.norm(M @ x - w[0] * x))
    mult = _multiplicity(w, w[0], DEFAULT_TOL, max(1.0, float(op.upper_bound)))
    return EigResult(float(w[0]), x, res, True, 0, max(1, mult))
