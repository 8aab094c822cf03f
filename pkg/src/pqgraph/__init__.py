"""Discrete (p,q)-Laplacian problems with a singular term on finite weighted graphs."""

from .energy import (FiberClass, NehariClass, ProblemInstance, analyze_fiber, constants,
                     energy_gradient, j_lambda, lambda_star, nehari_classify, pointwise_residual,
                     threshold_constants)
from .graph import WeightedGraph, validate_graph
from .solvers import (SolveReport, SolverOptions, minimize_global_negative, minimize_on_branch,
                      verify_solution)
from .spaces import CoefficientFields, Exponents

__version__ = "0.1.0"

__all__ = [
    "CoefficientFields", "Exponents", "FiberClass", "NehariClass", "ProblemInstance",
    "SolveReport", "SolverOptions", "WeightedGraph", "analyze_fiber", "constants",
    "energy_gradient", "j_lambda", "lambda_star", "minimize_global_negative",
    "minimize_on_branch", "nehari_classify", "pointwise_residual", "threshold_constants",
    "validate_graph", "verify_solution",
]
