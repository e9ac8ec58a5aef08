"""Barzilai-Borwein dynamics on strictly convex quadratics.

Solvers (BB and steepest descent), the eigen-coefficient recurrence they
induce, and mechanical certification of the per-step ratio bounds, the
R-linear envelope, and the exact-rate worst-case orbit.
"""

from ._kernels import NUMBA_ENABLED
from .bounds import (
    BoundLedger,
    VerificationReport,
    check_conditional_contraction,
    check_envelope,
    check_general_ratio,
    empirical_rate,
    ledger,
    verify_coefficients,
)
from .coeff_dynamics import (
    CoefficientState,
    Mode,
    SimulationResult,
    classify_mode,
    first_step,
    simulate,
    step,
)
from .problem import (
    DenseQuadratic,
    SpectralProblem,
    decompose,
    diagonal_problem,
    from_coefficients,
    gradient,
    load_problem,
    objective,
    synthesize,
    to_coefficients,
)
from .solvers import (
    SolverConfig,
    SolverTrajectory,
    TerminationReason,
    bb_step_size,
    run_bb,
    run_sd,
)
from .worst_case import (
    OrbitMode,
    TwoModeOrbit,
    embed_orbit_check,
    run_orbit,
    worst_case_x0,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "BoundLedger",
    "VerificationReport",
    "check_conditional_contraction",
    "check_envelope",
    "check_general_ratio",
    "empirical_rate",
    "ledger",
    "verify_coefficients",
    "CoefficientState",
    "Mode",
    "SimulationResult",
    "classify_mode",
    "first_step",
    "simulate",
    "step",
    "DenseQuadratic",
    "SpectralProblem",
    "decompose",
    "diagonal_problem",
    "from_coefficients",
    "gradient",
    "load_problem",
    "objective",
    "synthesize",
    "to_coefficients",
    "SolverConfig",
    "SolverTrajectory",
    "TerminationReason",
    "bb_step_size",
    "run_bb",
    "run_sd",
    "OrbitMode",
    "TwoModeOrbit",
    "embed_orbit_check",
    "run_orbit",
    "worst_case_x0",
]
