"""Spectral toolkit for matrix quadratic pencils -Y'' + (2 lambda P + Q) Y = lambda^2 Y on [0, pi]."""

from .model import (PencilProblem, ProblemDocument, ScalarFunctionSpec,
                    UniformGrid, dirichlet_boundary, make_problem,
                    neumann_boundary, parse_problem_document, validate_boundary,
                    zero_problem)
from .propagator import (Trajectory, characteristic_matrix, characteristic_scan,
                         default_grid_steps, integrate, left_initial_data)
from .spectral import (EigenvalueRecord, SolverOptions, Spectrum,
                       compare_spectra, locate_eigenvalues, multiplicity_at,
                       refine_root)
from .asymptotics import (asymptotic_gap_report, asymptotic_predictions,
                          constant_coefficient_oracle, unperturbed_spectrum)
from .kernels import (KernelField, diagonal_data, reconstruct_Y,
                      representation_residual, solve_goursat,
                      trace_identity_residual)
from .harness import (VerificationReport, check_ground_state_directions,
                      check_integral_balance, check_mean_potential_identity,
                      check_zero_spectrum_rigidity, integral_balance)

__version__ = "0.1.0"

__all__ = [
    "PencilProblem", "ProblemDocument", "ScalarFunctionSpec", "UniformGrid",
    "dirichlet_boundary", "make_problem", "neumann_boundary",
    "parse_problem_document", "validate_boundary", "zero_problem",
    "Trajectory", "characteristic_matrix", "characteristic_scan",
    "default_grid_steps", "integrate", "left_initial_data",
    "EigenvalueRecord", "SolverOptions", "Spectrum", "compare_spectra",
    "locate_eigenvalues", "multiplicity_at", "refine_root",
    "asymptotic_gap_report", "asymptotic_predictions",
    "constant_coefficient_oracle", "unperturbed_spectrum",
    "KernelField", "diagonal_data", "reconstruct_Y",
    "representation_residual", "solve_goursat", "trace_identity_residual",
    "VerificationReport", "check_ground_state_directions",
    "check_integral_balance", "check_mean_potential_identity",
    "check_zero_spectrum_rigidity", "integral_balance",
    "__version__",
]
