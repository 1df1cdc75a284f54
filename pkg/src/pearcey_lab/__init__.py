"""Numerics for the generating function of the Pearcey process.

The package evaluates the occupancy-number generating function F of the
Pearcey determinantal point process as a Fredholm determinant (by two
independent routes), extracts the residue data (delta, p, q, Delta) of the
associated Riemann-Hilbert problem from resolvent integrals, and verifies
the differential identities these objects satisfy: the Tracy-Widom-type
formula d^2/ds^2 log F = p^T q, a coupled third-order ODE system, a coupled
nonlinear heat equation, a fourth-order PDE for log F, and the large-shift
asymptotics in terms of the Pearcey-type functions P and Q.
"""

from .errors import (
    CostGuardError,
    GridDegeneracyError,
    PrecisionLossError,
    UnderResolvedError,
)
from .operators import (
    DetResult,
    DressedVectors,
    ModelConfig,
    OperatorMatrix,
    assemble_K,
    default_grid,
    det_one_minus_K,
    dressing_vectors,
    genfun,
    genfun_via_KP,
    kernel_KP,
    kernel_KP_matrix,
    theta,
)
from .pearcey_functions import (
    PearceyEval,
    SaddleSet,
    asymptotic,
    envelope,
    ode_residual,
    pearcey_P,
    pearcey_Q,
    phase,
    saddle_points,
)
from .quadrature import (
    CONTOUR_TAGS,
    IMAG_AXIS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    ContourSpec,
    Grid,
    Ray,
    build_contours,
    discretize,
    integrate,
    polyline_grid,
    truncation_radius,
)
from .rhp import Gamma1, LaxBlocks, OperatorState, gamma1, lax_A, lax_B_blocks, resolvent_columns
from .verify import (
    DEFAULT_TOLERANCES,
    FDScheme,
    PointCache,
    ResidualReport,
    check_asymptotics,
    check_delta_s,
    check_heat,
    check_logF_delta,
    check_ode3,
    check_pde,
    check_tau_identity,
    check_tw_formula,
    fd_coefficients,
    fd_derivative,
    occupancy,
    occupancy_table,
    run_suite,
)

__version__ = "0.1.0"

__all__ = [
    "CONTOUR_TAGS",
    "ContourSpec",
    "CostGuardError",
    "DEFAULT_TOLERANCES",
    "DetResult",
    "DressedVectors",
    "FDScheme",
    "Gamma1",
    "Grid",
    "GridDegeneracyError",
    "IMAG_AXIS",
    "LaxBlocks",
    "ModelConfig",
    "OperatorMatrix",
    "OperatorState",
    "PearceyEval",
    "PointCache",
    "PrecisionLossError",
    "Ray",
    "ResidualReport",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "SaddleSet",
    "UnderResolvedError",
    "assemble_K",
    "asymptotic",
    "build_contours",
    "check_asymptotics",
    "check_delta_s",
    "check_heat",
    "check_logF_delta",
    "check_ode3",
    "check_pde",
    "check_tau_identity",
    "check_tw_formula",
    "default_grid",
    "det_one_minus_K",
    "discretize",
    "dressing_vectors",
    "envelope",
    "fd_coefficients",
    "fd_derivative",
    "gamma1",
    "genfun",
    "genfun_via_KP",
    "integrate",
    "kernel_KP",
    "kernel_KP_matrix",
    "lax_A",
    "lax_B_blocks",
    "occupancy",
    "occupancy_table",
    "ode_residual",
    "pearcey_P",
    "pearcey_Q",
    "phase",
    "polyline_grid",
    "resolvent_columns",
    "run_suite",
    "saddle_points",
    "theta",
    "truncation_radius",
]
