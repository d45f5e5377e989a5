"""Mean-field linear-quadratic control with moment-based verification.

The package solves control problems whose cost couples to the state's law
through its first two moments.  A quadratic ansatz reduces the dynamic
programming equation on measures to a three-component Riccati system; the
optimal feedback is linear in the state and the mean.  Two independent
verification routes are built in: a deterministic moment-ODE oracle and an
interacting-particle Monte Carlo simulation, both of which also cover the
partially observed case via the prediction process.
"""

__version__ = "0.1.0"

from .errors import (AssumptionError, ConfigError, DomainError,
                     FiniteEscapeError, SimulationDivergedError)
from .model import (Coefficient, MatrixProblemSpec, MeasureMoments,
                    ParticleCloud, ProblemSpec, ValidationResult,
                    as_coefficient, eval_coefficient, moments_of,
                    validate_matrix_spec, validate_spec)
from .riccati import (DIVERGENCE_LIMIT, MatrixRiccatiSolution, RiccatiSolution,
                      analytic_riccati, analytic_solution, matrix_riccati_rhs,
                      riccati_rhs, sample_solution, solve_matrix_riccati,
                      solve_riccati)
from .control import (FeedbackLaw, hamiltonian, hamiltonian_minimizer,
                      master_residual, mu_derivative, optimal_feedback,
                      residual_sweep, value_function)
from .simulate import (CloudTrajectory, CostReport, EM_BIAS_CONST,
                       GaussianityReport, SimConfig, cost_oracle, evolve_cloud,
                       gaussianity_check, mc_tolerance, perturbation_sweep,
                       simulate_mc)
from .partial_obs import (DecompositionReport, PartialObsSpec,
                          PartialTrajectory, analytic_partial_phi,
                          analytic_partial_solution, cost_decomposition_check,
                          error_variance, evolve_partial,
                          optimal_prediction_feedback, partial_value,
                          reduced_problem, simulate_partial)
from .presets import PRESET_NAMES, partial_preset, preset, scalar_preset
from .config import ResolvedConfig, load_config, parse_config, serialize_config

__all__ = [
    "__version__",
    # errors
    "AssumptionError", "ConfigError", "DomainError", "FiniteEscapeError",
    "SimulationDivergedError",
    # model
    "Coefficient", "MatrixProblemSpec", "MeasureMoments", "ParticleCloud",
    "ProblemSpec", "ValidationResult", "as_coefficient", "eval_coefficient",
    "moments_of", "validate_matrix_spec", "validate_spec",
    # riccati
    "DIVERGENCE_LIMIT", "MatrixRiccatiSolution", "RiccatiSolution",
    "analytic_riccati", "analytic_solution", "matrix_riccati_rhs",
    "riccati_rhs", "sample_solution", "solve_matrix_riccati", "solve_riccati",
    # control
    "FeedbackLaw", "hamiltonian", "hamiltonian_minimizer", "master_residual",
    "mu_derivative", "optimal_feedback", "residual_sweep", "value_function",
    # simulate
    "CloudTrajectory", "CostReport", "EM_BIAS_CONST", "GaussianityReport",
    "SimConfig", "cost_oracle", "evolve_cloud", "gaussianity_check",
    "mc_tolerance", "perturbation_sweep", "simulate_mc",
    # partial observation
    "DecompositionReport", "PartialObsSpec", "PartialTrajectory",
    "analytic_partial_phi", "analytic_partial_solution",
    "cost_decomposition_check", "error_variance", "evolve_partial",
    "optimal_prediction_feedback", "partial_value", "reduced_problem",
    "simulate_partial",
    # presets and config
    "PRESET_NAMES", "partial_preset", "preset", "scalar_preset",
    "ResolvedConfig", "load_config", "parse_config", "serialize_config",
]
