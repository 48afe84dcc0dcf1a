"""Ground state energies of the discrete operator L + V(k theta + eta) on
theta Z^d and the continuum operator -theta^2 Laplace + V on the periodic
cell, the two test-function transfers between them, and explicit bounds."""

from .bounds import (
    BoundReport,
    a_parameter,
    build_report,
    c_d_constant,
    mathieu_ratio_bound,
    r_constant,
    thm31_rhs,
    verify_thm41,
)
from .continuum_op import ContinuumGroundState, gaussian_upper_bound, mu_B, slope_fit_muB
from .cube_fourier import aggregate_mk, cube_coefficients, identity_suite, nu_measures
from .discrete_op import DiscreteGroundState, mu_A, union_spectrum_inf
from .eigensolve import SymmetricOperator, dense_eig_oracle, smallest_eig
from .lattice import LatticeBox, LatticeFunction
from .potential import PotentialSpec, make_almost_mathieu, make_separable_power, potential_from_name
from .transfer import MultilinearExtension, expected_sampling_forms, multilinear_extend, verify_thm11_instance

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ContinuumGroundState",
    "DiscreteGroundState",
    "LatticeBox",
    "LatticeFunction",
    "MultilinearExtension",
    "PotentialSpec",
    "SymmetricOperator",
    "a_parameter",
    "aggregate_mk",
    "build_report",
    "c_d_constant",
    "cube_coefficients",
    "dense_eig_oracle",
    "expected_sampling_forms",
    "gaussian_upper_bound",
    "identity_suite",
    "make_almost_mathieu",
    "make_separable_power",
    "mathieu_ratio_bound",
    "mu_A",
    "mu_B",
    "multilinear_extend",
    "nu_measures",
    "potential_from_name",
    "r_constant",
    "slope_fit_muB",
    "smallest_eig",
    "thm31_rhs",
    "union_spectrum_inf",
    "verify_thm11_instance",
]
