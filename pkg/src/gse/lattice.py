"""Finite boxes of theta Z^d, functions on them, and the cube-corner convention.

Corner convention (shared by every module): corner ``c`` of the cube with
base site ``k`` is the site ``k + bits(c)`` where bit ``i`` of ``c`` is the
offset along axis ``i``. Bit 1 on axis ``i`` corresponds to the
hypercube coordinate ``x_i = +1`` and the base site maps to ``(-1, ..., -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from ._validation import check_eta, check_int, check_theta

COMMENSURATE_TOL = 1e-12


@lru_cache(maxsize=None)
def corner_offsets(dim):
    """Array of shape (2**dim, dim) with row ``c`` holding the bits of ``c``."""
    c = np.arange(2**dim)
    bits = (c[:, None] >> np.arange(dim)[None, :]) & 1
    bits.setflags(write=False)
    return bits


@lru_cache(maxsize=None)
def cube_edges(dim):
    """Corner index pairs (c, c | 1 << i) for each edge of the d-cube."""
    edges = [(c, c | (1 << i)) for i in range(dim) for c in range(2**dim) if not c >> i & 1]
    return np.array(edges, dtype=int).reshape(-1, 2)


@dataclass(frozen=True)
class LatticeBox:
    """Sites of theta Z^d + eta kept after truncation.

    ``boundary="dirichlet"`` keeps multi-indices ``{-N..N}^d`` (``radius=N``)
    and treats everything outside as zero. ``boundary="periodic"`` keeps
    ``{0..q-1}^d`` (``period=q``) and wraps; this requires ``q * theta`` to
    be an integer so that the potential is periodic on the box.
    """

    dim: int
    theta: float
    eta: tuple = None
    radius: int = 2
    boundary: str = "dirichlet"
    period: Optional[int] = None
    check_commensurate: bool = True

    def __post_init__(self):
        check_int(self.dim, "dim", 1)
        check_theta(self.theta, allow_one=True)
        object.__setattr__(self, "eta", tuple(check_eta(self.eta, self.dim, self.theta)))
        if self.boundary == "dirichlet":
            check_int(self.radius, "radius", 2)
        elif self.boundary == "periodic":
            q = check_int(self.period, "period", 2)
            qt = q * self.theta
            if self.check_commensurate and abs(qt - round(qt)) > COMMENSURATE_TOL:
                raise ValueError(f"periodic({q}) needs q*theta integral, got {qt!r}")
        else:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def periodic(self):
        return self.boundary == "periodic"

    @property
    def side(self):
        return self.period if self.periodic else 2 * self.radius + 1

    @property
    def shape(self):
        return (self.side,) * self.dim

    @property
    def size(self):
        return self.side**self.dim

    @property
    def first(self):
        """Multi-index coordinate of array position 0 along each axis."""
        return 0 if self.periodic else -self.radius

    def axis_indices(self):
        return np.arange(self.side) + self.first

    def sites(self):
        """Integer multi-indices, shape ``shape + (dim,)`` (row-major)."""
        axes = [self.axis_indices()] * self.dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def positions(self):
        """Points k*theta + eta, shape ``shape + (dim,)``."""
        return self.sites() * self.theta + np.asarray(self.eta)

    def with_radius(self, radius):
        return LatticeBox(self.dim, self.theta, self.eta, radius, "dirichlet")


@dataclass
class LatticeFunction:
    box: LatticeBox
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.box.shape)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("lattice function values must be finite")

    def norm2(self):
        return float(np.sum(self.values**2))

    def padded(self):
        """Values on the box grown by one zero layer per side (Dirichlet only).

        Every cube meeting the support then lies inside the padded array,
        which makes cube sums over it equal to sums over all of Z^d.
        """
        if self.box.periodic:
            raise ValueError("padding applies to Dirichlet boxes only")
        return np.pad(self.values, 1)

    def laplacian_form(self):
        """<f, L f> as the sum of (f(u)-f(v))^2 over lattice edges.

        Dirichlet boxes count the edges leaving the box (f = 0 outside);
        periodic boxes wrap.
        """
        v = self.values
        total = 0.0
        for axis in range(self.box.dim):
            if self.box.periodic:
                # for q == 2 this counts the doubled edge of the 2-cycle twice
                diff = np.roll(v, -1, axis=axis) - v
            else:
                diff = np.diff(np.pad(v, 1), axis=axis)
            total += float(np.sum(diff**2))
        return total
