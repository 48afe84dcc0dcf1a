"""Periodic potentials V: R^d -> R_{>=0} together with the regularity metadata
consumed by the bound formulas (Lipschitz constant, derivative bound,
coercivity triple, sup norm)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import comb

from ._validation import as_points, check_int, check_positive

SAFETY = 1.05
FD_STEP = 1e-5


class Coercivity(NamedTuple):
    t0: float
    K: float
    P: int


@dataclass(frozen=True)
class PotentialSpec:
    """A Z^d-periodic nonnegative potential plus analytic metadata.

    ``func`` maps an array of points with trailing axis ``dim`` to the
    potential values. All metadata are upper bounds; when ``estimated`` is
    set they come from dense sampling and carry a 5% safety inflation.
    """

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz: float = 0.0
    deriv_bound: float = 0.0
    sup_norm: float = 0.0
    coercivity: Optional[Coercivity] = None
    params: dict = field(default_factory=dict)
    estimated: bool = False
    period: float = 1.0

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        pts = as_points(x, self.dim)
        return np.asarray(self.func(pts), dtype=float)

    def label(self):
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}{{{inner}}}"

    def shifted(self, s):
        """V(. + s); metadata are translation invariant."""
        s = np.asarray(s, dtype=float).reshape(self.dim)
        func = self.func
        return replace(self, func=lambda x: func(x + s), name=f"{self.name}+shift")

    def scaled(self, c):
        """c * V for c > 0, with metadata rescaled accordingly."""
        c = check_positive(c, "c")
        func = self.func
        coer = None
        if self.coercivity is not None:
            t0, K, P = self.coercivity
            # cV(y) <= t  <=>  V(y) <= t/c; worst order over 2..P
            coer = Coercivity(c * t0, K * max(c ** -0.5, c ** (-1.0 / P)), P)
        return replace(
            self,
            func=lambda x: c * func(x),
            lipschitz=c * self.lipschitz,
            deriv_bound=c * self.deriv_bound,
            sup_norm=c * self.sup_norm,
            coercivity=coer,
            name=f"{c:g}*{self.name}",
        )


def make_almost_mathieu(lam, dim=1):
    """lam * (2 - 2 cos 2 pi x), summed over coordinates when ``dim > 1``.

    The metadata for ``dim == 1`` are the closed-form values:
    sup 4 lam, Lipschitz 4 pi lam, second derivative bound 8 pi^2 lam and
    coercivity (4 lam, 1/(2 pi sqrt(lam)), 2).
    """
    lam = check_positive(lam, "lambda")
    dim = check_int(dim, "dim", 1)

    def func(x):
        return lam * np.sum(2.0 - 2.0 * np.cos(2.0 * np.pi * x), axis=-1)

    root_d = math.sqrt(dim)
    return PotentialSpec(
        name="almost_mathieu",
        dim=dim,
        func=func,
        lipschitz=4.0 * math.pi * lam * root_d,
        # max(|D_u V|, |D_v D_u V|) = max(4 pi lam sqrt(d), 8 pi^2 lam)
        deriv_bound=max(4.0 * math.pi * lam * root_d, 8.0 * math.pi**2 * lam),
        sup_norm=4.0 * lam * dim,
        coercivity=Coercivity(4.0 * lam, root_d / (2.0 * math.pi * math.sqrt(lam)), 2),
        params={"lambda": lam} if dim == 1 else {"lambda": lam, "dim": dim},
    )


def make_separable_power(dim, p, H, samples=1000):
    """H * sum_i (sin(pi x_i) / pi)^p.

    Near each lattice point this agrees with H * sum_i x_i^p to leading
    order, so every critical point at Z^d has order exactly ``p``.
    Lipschitz, sup and derivative bounds are sampled estimates; the
    coercivity triple is analytic (sin(pi u) >= 2u on [0, 1/2]).
    """
    dim = check_int(dim, "dim", 1)
    p = check_int(p, "p", 2)
    if p % 2:
        raise ValueError(f"p must be even (odd powers break nonnegativity), got {p}")
    H = check_positive(H, "H")

    def func(x):
        return H * np.sum((np.sin(np.pi * x) / np.pi) ** p, axis=-1)

    K = max(1.0, math.sqrt(dim) * (math.pi / 2.0) * H ** (-1.0 / p))
    spec = PotentialSpec(
        name="separable_power",
        dim=dim,
        func=func,
        coercivity=Coercivity(dim * H / math.pi**p, K, p),
        params={"dim": dim, "p": p, "H": H},
    )
    return estimate_metadata(spec, samples=samples)


def make_zero(dim=1):
    dim = check_int(dim, "dim", 1)
    return PotentialSpec(name="zero", dim=dim, func=lambda x: np.zeros(x.shape[:-1]), params={"dim": dim})


def make_constant(value, dim=1):
    value = float(value)
    if value < 0:
        raise ValueError("constant potential must be nonnegative")
    dim = check_int(dim, "dim", 1)
    return PotentialSpec(
        name="constant",
        dim=dim,
        func=lambda x: np.full(x.shape[:-1], value),
        sup_norm=value,
        params={"value": value, "dim": dim},
    )


POTENTIALS = {
    "almost_mathieu": lambda lam=1.0, dim=1: make_almost_mathieu(lam, int(dim)),
    "separable_power": lambda dim=1, p=2, H=1.0: make_separable_power(int(dim), int(p), H),
    "zero": lambda dim=1: make_zero(int(dim)),
    "constant": lambda value=1.0, dim=1: make_constant(value, int(dim)),
}


def potential_from_name(name, **params):
    """Build a potential from its config selector, e.g. ``almost_mathieu`` with ``lambda=1``."""
    if name not in POTENTIALS:
        raise KeyError(f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}")
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    return POTENTIALS[name](**params)


# -- metadata estimation ------------------------------------------------------


def _sample_points(dim, samples, max_points, rng):
    if samples**dim <= max_points:
        axes = [np.arange(samples) / samples] * dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return rng.random((max_points, dim))


def _directional_derivative(func, x, v, order, h):
    # central stencil of the given order along direction v, O(h^2)
    acc = np.zeros(x.shape[0])
    for j in range(order + 1):
        offset = (order / 2.0 - j) * h
        acc += (-1) ** j * comb(order, j) * func(x + offset * v)
    return acc / h**order


def estimate_metadata(spec, samples=1000, safety=SAFETY, max_points=400_000, seed=0):
    """Fill sup norm, Lipschitz constant and derivative bound by sampling one period.

    Values are maxima over a regular grid of ``samples`` points per axis
    (random points when the grid would exceed ``max_points``), inflated by
    ``safety``. Derivatives use central differences: step 1e-5 for the
    gradient, 1e-4 for the Hessian, 1e-2 for third and higher orders.
    """
    samples = check_int(samples, "samples", 1000)
    d = spec.dim
    rng = np.random.default_rng(seed)
    x = _sample_points(d, samples, max_points, rng)
    f = spec.func

    vals = f(x)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("potential returned non-finite values while sampling")
    sup = float(np.max(vals, initial=0.0))

    eye = np.eye(d)
    grad = np.stack([(f(x + FD_STEP * e) - f(x - FD_STEP * e)) / (2 * FD_STEP) for e in eye], axis=-1)
    lip = float(np.max(np.linalg.norm(grad, axis=-1)))

    P = spec.coercivity.P if spec.coercivity is not None else 2
    bound = lip  # k = 0
    if P >= 2:
        hstep = 1e-4
        hess = np.empty((x.shape[0], d, d))
        f0 = vals
        for i in range(d):
            for j in range(i, d):
                if i == j:
                    hij = (f(x + hstep * eye[i]) - 2 * f0 + f(x - hstep * eye[i])) / hstep**2
                else:
                    ei, ej = hstep * eye[i], hstep * eye[j]
                    hij = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * hstep**2)
                hess[:, i, j] = hij
                hess[:, j, i] = hij
        bound = max(bound, float(np.max(np.linalg.norm(hess, ord=2, axis=(1, 2)))))
    if P >= 3:
        dirs = list(eye) + list(rng.normal(size=(8, d)))
        for k in range(2, P):
            for v in dirs:
                v = v / np.linalg.norm(v)
                dk = _directional_derivative(f, x, v, k + 1, 1e-2)
                bound = max(bound, float(np.max(np.abs(dk))) / math.factorial(k))

    return replace(
        spec,
        lipschitz=safety * lip,
        sup_norm=safety * sup,
        deriv_bound=safety * bound,
        estimated=True,
    )
