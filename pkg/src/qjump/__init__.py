"""Monte Carlo wave-function simulation of coupled-component (generalized
Lindblad) master equations, with a deterministic Runge-Kutta oracle."""

from .engine import (
    EnsembleResult,
    NonPositiveStepError,
    StepProbabilities,
    StepTooLargeError,
    TrajectoryFailureError,
    TrajectoryState,
    ZeroNormJumpError,
    advance,
    apply_jump,
    apply_non_jump,
    child_seed,
    enumerate_single_step,
    run_ensemble,
    run_trajectory,
    step_probabilities,
)
from .model import (
    GeneralizedLindbladModel,
    JumpTerm,
    ValidationReport,
    build_spin_bath,
    build_two_band,
    effective_hamiltonian,
    gamma_from_microscopic,
    jump_mode_count,
    jump_mode_count_for_model,
    validate,
)
from .observables import (
    ImaginaryResidueError,
    Observable,
    expectation_density,
    expectation_wavefunction,
)
from .reference import (
    DensitySeries,
    IntegrationInvariantError,
    closed_form_two_band,
    closed_form_two_band_series,
    density_expectations,
    master_rhs,
    reduce_density,
    rk4_integrate,
)
from .stats import ComparisonReport, EnsembleAccumulator, TimeSeries, compare_series

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "DensitySeries",
    "EnsembleAccumulator",
    "EnsembleResult",
    "GeneralizedLindbladModel",
    "ImaginaryResidueError",
    "IntegrationInvariantError",
    "JumpTerm",
    "NonPositiveStepError",
    "Observable",
    "StepProbabilities",
    "StepTooLargeError",
    "TimeSeries",
    "TrajectoryFailureError",
    "TrajectoryState",
    "ValidationReport",
    "ZeroNormJumpError",
    "advance",
    "apply_jump",
    "apply_non_jump",
    "build_spin_bath",
    "build_two_band",
    "child_seed",
    "closed_form_two_band",
    "closed_form_two_band_series",
    "compare_series",
    "density_expectations",
    "effective_hamiltonian",
    "enumerate_single_step",
    "expectation_density",
    "expectation_wavefunction",
    "gamma_from_microscopic",
    "jump_mode_count",
    "jump_mode_count_for_model",
    "master_rhs",
    "reduce_density",
    "rk4_integrate",
    "run_ensemble",
    "run_trajectory",
    "step_probabilities",
    "validate",
]
