"""Explicit comparison bounds between the discrete and continuum ground
energies, the cube-average ratio a(theta), the constant c_d, and the
BoundReport record that collects them."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ._validation import check_int, check_positive, check_theta
from .continuum_op import gauss_legendre_cube, gaussian_upper_bound, mu_B
from .discrete_op import mu_A, union_spectrum_inf
from .lattice import corner_offsets

FOURTH_ROOT_8 = 8.0**0.25


# -- upper bound on mu(B) from mu(A) -----------------------------------------------


@dataclass(frozen=True)
class UpperBound:
    """Implied upper bound on mu(B_theta); ``value`` is inf when not applicable."""

    value: float
    applicable: bool
    reason: str = ""
    terms: dict = field(default_factory=dict)


def _not_applicable(reason, **terms):
    return UpperBound(math.inf, False, reason, terms)


def thm31_rhs(mu_A, spec, theta, q, eps=0.0):
    """mu_A + (2 M K sqrt(d) theta^{1+q(P-1)/P} + (mu_A + eps + 2 L s / (1 - L s)) mu_A) / (1 - mu_A - eps).

    Here s = theta^{1-q}; ``eps`` is how far ``mu_A`` may sit above the true
    discrete energy (a solver residual, say). Needs q in (0, 1),
    theta^q <= t0, mu_A + eps < 1 and L theta^{1-q} < 1; otherwise the
    result is flagged not applicable.
    """
    theta = check_theta(theta, allow_one=True)
    mu = float(mu_A)
    if not 0.0 < q < 1.0:
        return _not_applicable(f"q={q!r} outside (0, 1)")
    if spec.coercivity is None:
        return _not_applicable("potential has no coercivity parameters")
    t0, K, P = spec.coercivity
    L, M = spec.lipschitz, spec.deriv_bound
    d = spec.dim
    s = theta ** (1.0 - q)
    terms = {"q": q, "L": L, "M_P": M, "K": K, "P": P, "t0": t0, "L_theta": L * s}
    if theta**q > t0:
        return _not_applicable(f"theta^q={theta**q:.6g} exceeds t0={t0:.6g}", **terms)
    if mu + eps >= 1.0:
        return _not_applicable(f"mu_A + eps = {mu + eps:.6g} >= 1", **terms)
    if L * s >= 1.0:
        return _not_applicable(f"L theta^(1-q) = {L * s:.6g} >= 1", **terms)
    local = 2.0 * M * K * math.sqrt(d) * theta ** (1.0 + q * (P - 1) / P)
    lip = 2.0 * L * s / (1.0 - L * s)
    # compensated sums keep tiny margins meaningful
    inner = math.fsum([local, math.fsum([mu, eps, lip]) * mu])
    value = math.fsum([mu, inner / (1.0 - mu - eps)])
    terms.update(local_term=local, lipschitz_term=lip)
    return UpperBound(value, True, "", terms)


def potential_transfer_bound(spec, theta, q, R_V_f, R):
    """Bound on |R_V(g) - R_V(f)| for the multilinear extension g of f.

    (2 M K sqrt(d) theta^{1+q(P-1)/P} + 2 L s / (1 - L s) R_V(f)) / (1 - R),
    with ``R`` the full Rayleigh quotient of f on the lattice (it replaces
    mu + eps) and ``R_V_f`` its potential part.
    """
    if not 0.0 < q < 1.0 or spec.coercivity is None:
        return _not_applicable("needs q in (0, 1) and coercivity parameters")
    t0, K, P = spec.coercivity
    s = theta ** (1.0 - q)
    L = spec.lipschitz
    if theta**q > t0 or L * s >= 1.0 or R >= 1.0:
        return _not_applicable("theta^q > t0, L theta^(1-q) >= 1 or R >= 1")
    local = 2.0 * spec.deriv_bound * K * math.sqrt(spec.dim) * theta ** (1.0 + q * (P - 1) / P)
    return UpperBound((local + 2.0 * L * s / (1.0 - L * s) * R_V_f) / (1.0 - R), True)


def mathieu_ratio_bound(lam, theta, mu_A, q=5.0 / 6.0, mu_A_lower=None):
    """Upper bound on mu(B)/mu(A) for lam (2 - 2 cos 2 pi x).

    1 + (8 pi sqrt(lam) theta^{1+q/2} / mu_lower + mu_A
         + 8 pi lam s / (1 - 4 pi lam s)) / (1 - mu_A),  s = theta^{1-q}.

    ``mu_A_lower`` (default ``mu_A``) is the lower bound used when dividing
    the additive term by mu(A).
    """
    lam = check_positive(lam, "lambda")
    theta = check_theta(theta)
    mu = float(mu_A)
    lower = mu if mu_A_lower is None else float(mu_A_lower)
    s = theta ** (1.0 - q)
    if mu >= 1.0 or 4.0 * math.pi * lam * s >= 1.0 or lower <= 0.0:
        return _not_applicable("a denominator is not positive", mu_A=mu, L_theta=4 * math.pi * lam * s)
    local = 8.0 * math.pi * math.sqrt(lam) * theta ** (1.0 + q / 2.0)
    lip = 8.0 * math.pi * lam * s / (1.0 - 4.0 * math.pi * lam * s)
    return UpperBound(1.0 + (local / lower + mu + lip) / (1.0 - mu), True)


def mathieu_ratio_display(lam, theta):
    """The q = 5/6 specialization exactly as it is usually printed.

    1 + (8 pi sqrt(lam) theta^{1/12} + c theta^2 + 8 pi lam theta^{1/6} / (1 - 4 pi lam theta^{1/6}))
        / (1 - c theta^2),  c = 8^{1/4} pi sqrt(lam).
    """
    c = FOURTH_ROOT_8 * math.pi * math.sqrt(lam)
    s = theta ** (1.0 / 6.0)
    lip = 8.0 * math.pi * lam * s / (1.0 - 4.0 * math.pi * lam * s)
    return 1.0 + (8.0 * math.pi * math.sqrt(lam) * theta ** (1.0 / 12.0) + c * theta**2 + lip) / (1.0 - c * theta**2)


# -- a(theta) and c_d --------------------------------------------------------------


@dataclass(frozen=True)
class AParameter:
    """Worst ratio of the continuum cube average of V to its corner average.

    ``value`` is None when some cube has a vanishing corner sum but a
    positive integral (no finite a exists).
    """

    value: Optional[float]
    exists: bool
    worst_base: Optional[np.ndarray]
    bases: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    squared: bool = False


def _rational(theta, max_den):
    frac = Fraction(theta).limit_denominator(max_den)
    if abs(float(frac) - theta) <= 1e-12:
        return frac
    return None


def a_parameter(spec, theta, resolution=256, squared=False, quad_order=8, eta=None, zero_tol=1e-14):
    """a(theta) = max over cubes of [theta^-d int_cube W] / [2^-d sum_corners W].

    W is V, or V^2 with ``squared``. For rational theta = p/q with
    q <= ``resolution`` the bases k theta, k in {0..q-1}^d, cover every cube
    modulo the period exactly; otherwise the first ``resolution`` multiples
    per axis are used. Cube integrals use tensor Gauss-Legendre quadrature.
    """
    theta = check_theta(theta, allow_one=True)
    check_int(resolution, "resolution", 1)
    d = spec.dim
    frac = _rational(theta, resolution)
    m = frac.denominator if frac is not None else resolution
    axis = np.arange(m)
    bases = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), axis=-1).reshape(-1, d)
    shift = np.zeros(d) if eta is None else np.asarray(eta, dtype=float).reshape(d)

    def W(x):
        v = spec.eval(x)
        return v**2 if squared else v

    nodes, weights = gauss_legendre_cube(d, quad_order)
    pts = (bases[:, None, :] + 0.5 * (1.0 + nodes[None, :, :])) * theta + shift
    cont = (W(pts.reshape(-1, d)).reshape(len(bases), -1) @ weights) / 2**d
    corners = (bases[:, None, :] + corner_offsets(d)[None, :, :]) * theta + shift
    disc = W(corners.reshape(-1, d)).reshape(len(bases), -1).mean(axis=1)
    scale = max(1.0, float(np.max(np.abs(cont), initial=0.0)))
    vanishing = disc <= zero_tol * scale
    if np.any(vanishing & (cont > zero_tol * scale)):
        return AParameter(None, False, bases[np.argmax(vanishing & (cont > zero_tol * scale))], bases, cont / np.where(vanishing, np.nan, disc), squared)
    # cubes where both averages vanish impose no constraint
    ratios = np.where(vanishing, 0.0, cont / np.where(vanishing, 1.0, disc))
    i = int(np.argmax(ratios))
    return AParameter(float(ratios[i]), True, bases[i], bases, ratios, squared)


def alpha_d(d):
    return 1.0 / (10.0 * 2**d)


def r_constant(d):
    """r with sqrt(r) = (sqrt(1 - alpha) - sqrt(2^d alpha)) / (1 + sqrt(2^d alpha))."""
    a = alpha_d(d)
    root = (math.sqrt(1.0 - a) - math.sqrt(2**d * a)) / (1.0 + math.sqrt(2**d * a))
    if root <= 0:
        raise ArithmeticError(f"r is not positive for d={d}")
    return root**2


@dataclass(frozen=True)
class CdConstant:
    value: float
    first: float
    second: float
    r: float
    alpha: float
    variant: str


def c_d_constant(d, a, variant="thm41"):
    """c_d = max{(3/2)^d + 5 3^d, second}; second is 4 (3/2)^d a ("thm14") or (3/2)^d a / r ("thm41")."""
    d = check_int(d, "d", 1)
    a = check_positive(a, "a")
    first = 1.5**d + 5.0 * 3**d
    r = r_constant(d)
    if variant == "thm14":
        second = 4.0 * 1.5**d * a
    elif variant == "thm41":
        second = 1.5**d * a / r
    else:
        raise ValueError(f"unknown variant {variant!r}")
    value = max(first, second)
    return CdConstant(value, first, second, r, alpha_d(d), variant)


def potential_comparison_rhs(theta, d, lap_f, pot_f, a):
    """theta^d (10 2^{d-1} <f, L f> + (a / r) <f, V f>), the bound on <g, V g>."""
    return theta**d * (10.0 * 2 ** (d - 1) * lap_f + a / r_constant(d) * pot_f)


# -- checks assembled from solver output ---------------------------------------


@dataclass(frozen=True)
class Thm31Record:
    q: float
    L: float
    M_P: float
    K: float
    P: int
    eps: float
    rhs: float
    applicable: bool
    holds: bool
    margin: float
    reason: str = ""


def thm31_record(mu_A_value, mu_B_value, spec, theta, q, eps=0.0):
    ub = thm31_rhs(mu_A_value, spec, theta, q, eps)
    t0, K, P = spec.coercivity if spec.coercivity is not None else (math.nan, math.nan, 0)
    margin = ub.value - mu_B_value
    # a bound that does not apply cannot be violated
    return Thm31Record(q, spec.lipschitz, spec.deriv_bound, K, P, eps, ub.value, ub.applicable, bool(margin >= 0), margin, ub.reason)


@dataclass(frozen=True)
class Thm41Record:
    a: Optional[float]
    a_exists: bool
    squared: bool
    r: float
    alpha_d: float
    c_d: Optional[float]
    c_d_thm14: Optional[float]
    lhs: Optional[float]
    holds: bool
    applicable: bool
    margin: float
    rescale: float = 1.0
    mu_A: float = math.nan
    mu_B: float = math.nan
    reason: str = ""


def verify_thm41(spec, theta, tol=1e-8, squared=False, resolution=256, mu_values=None, solver_tol=1e-9, **solver_kwargs):
    """Check c_d mu(A) >= mu(B) - tol with c_d built from the computed a(theta).

    The comparison needs ||V||_inf <= 1; a larger potential is rescaled by
    1/||V||_inf first and both energies are computed for the rescaled
    potential (recorded in ``rescale``). ``mu_values`` may supply
    precomputed (mu_A, mu_B) for the potential actually compared.
    """
    d = spec.dim
    rescale = 1.0
    if spec.sup_norm > 1.0:
        rescale = 1.0 / spec.sup_norm
        spec = spec.scaled(rescale)
    ap = a_parameter(spec, theta, resolution=resolution, squared=squared)
    r, al = r_constant(d), alpha_d(d)
    if not ap.exists or ap.value is None or ap.value <= 0:
        reason = "a nonexistent" if not ap.exists else "V vanishes on every cube; a undefined"
        return Thm41Record(None, ap.exists, squared, r, al, None, None, None, True, False, math.inf, rescale, reason=reason)
    c41 = c_d_constant(d, ap.value, "thm41").value
    c14 = c_d_constant(d, ap.value, "thm14").value
    if mu_values is None:
        a_val = mu_A(spec, theta, tol=solver_tol, **solver_kwargs).value
        eig = {"eig_tol": solver_kwargs["eig_tol"]} if "eig_tol" in solver_kwargs else {}
        b_val = mu_B(spec, theta, tol=solver_tol, **eig).value
    else:
        a_val, b_val = mu_values
    lhs = c41 * a_val
    margin = lhs - (b_val - tol)
    return Thm41Record(ap.value, True, squared, r, al, c41, c14, lhs, bool(margin >= 0), True, margin, rescale, a_val, b_val)


def well_parameters(spec):
    """(H, p) with V(x) <= H |x|^p near the well at the origin, when known."""
    if spec.name == "almost_mathieu":
        return 4.0 * math.pi**2 * spec.params["lambda"], 2
    if spec.name == "separable_power":
        return spec.params["H"], spec.params["p"]
    return None


# -- report ----------------------------------------------------------------------


CSV_VERSION = "# gse-compare v1"
CSV_COLUMNS = [
    "potential",
    "d",
    "theta",
    "mu_A",
    "mu_B",
    "ratio",
    "mu_A_converged",
    "mu_B_converged",
    "thm11_holds",
    "thm11_margin",
    "q",
    "thm31_rhs",
    "thm31_applicable",
    "thm31_holds",
    "thm31_margin",
    "a",
    "c_d",
    "c_d_lhs",
    "thm41_applicable",
    "thm41_holds",
    "thm41_margin",
    "gaussian_ub",
    "union_inf",
]


@dataclass
class BoundReport:
    """Everything computed at one (potential, theta)."""

    potential: str
    d: int
    theta: float
    mu_A: float
    mu_B: float
    mu_A_converged: bool
    mu_B_converged: bool
    thm11_holds: bool
    thm11_margin: float
    thm31: list = field(default_factory=list)
    thm41: Optional[Thm41Record] = None
    gaussian_ub: Optional[float] = None
    union_inf: Optional[float] = None
    irrational: bool = False

    @property
    def ratio(self):
        return self.mu_B / self.mu_A if self.mu_A > 0 else math.nan

    @property
    def converged(self):
        return self.mu_A_converged and self.mu_B_converged

    def violations(self):
        """Names of inequalities that fail beyond tolerance (vacuous checks never fail)."""
        out = []
        if not self.thm11_holds:
            out.append("thm11")
        out += [f"thm31(q={t.q:g})" for t in self.thm31 if t.applicable and not t.holds]
        if self.thm41 is not None and self.thm41.applicable and not self.thm41.holds:
            out.append("thm41")
        return out

    def to_dict(self):
        out = asdict(self)
        out["ratio"] = self.ratio
        return _jsonable(out)

    def csv_rows(self):
        base = {
            "potential": self.potential,
            "d": self.d,
            "theta": self.theta,
            "mu_A": self.mu_A,
            "mu_B": self.mu_B,
            "ratio": self.ratio,
            "mu_A_converged": self.mu_A_converged,
            "mu_B_converged": self.mu_B_converged,
            "thm11_holds": self.thm11_holds,
            "thm11_margin": self.thm11_margin,
            "gaussian_ub": self.gaussian_ub,
            "union_inf": self.union_inf,
        }
        t41 = self.thm41
        if t41 is not None:
            base.update(
                a=t41.a if t41.a_exists else "nonexistent",
                c_d=t41.c_d,
                c_d_lhs=t41.lhs,
                thm41_applicable=t41.applicable,
                thm41_holds=t41.holds,
                thm41_margin=t41.margin,
            )
        rows = []
        for t in self.thm31 or [None]:
            row = dict(base)
            if t is not None:
                row.update(
                    q=t.q,
                    thm31_rhs=t.rhs,
                    thm31_applicable=t.applicable,
                    thm31_holds=t.holds,
                    thm31_margin=t.margin,
                )
            rows.append([_fmt(row.get(c)) for c in CSV_COLUMNS])
        return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def reports_to_csv(reports):
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerows(rep.csv_rows())
    return buf.getvalue()


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def build_report(
    spec,
    theta,
    qs=(),
    tol=1e-9,
    rel_tol=1e-3,
    abs_tol=1e-6,
    thm41_tol=1e-8,
    eta_grid=None,
    union_period=None,
    run_thm41=True,
    irrational=False,
    solver_kwargs=None,
):
    """Compute both ground energies at ``theta`` and evaluate every bound."""
    solver_kwargs = dict(solver_kwargs or {})
    a = mu_A(spec, theta, tol=tol, **solver_kwargs)
    b = mu_B(spec, theta, tol=tol, **({"eig_tol": solver_kwargs["eig_tol"]} if "eig_tol" in solver_kwargs else {}))
    rhs11 = b.value * (1.0 + rel_tol) + abs_tol
    eps = max(a.residual, 0.0)
    thm31 = [thm31_record(a.value, b.value, spec, theta, q, eps) for q in qs]
    thm41 = None
    if run_thm41:
        if spec.sup_norm > 1.0:
            thm41 = verify_thm41(spec, theta, thm41_tol, solver_tol=tol, **solver_kwargs)
        else:
            thm41 = verify_thm41(spec, theta, thm41_tol, mu_values=(a.value, b.value))
    gub = None
    well = well_parameters(spec)
    if well is not None:
        gub = gaussian_upper_bound(well[0], well[1], spec.dim, theta).value
    union = None
    if eta_grid:
        union = union_spectrum_inf(spec, theta, eta_grid, tol=tol, period=union_period, **solver_kwargs).value
    return BoundReport(
        spec.label(),
        spec.dim,
        float(theta),
        a.value,
        b.value,
        a.converged,
        b.converged,
        bool(a.value <= rhs11),
        float(rhs11 - a.value),
        thm31,
        thm41,
        gub,
        union,
        irrational,
    )
