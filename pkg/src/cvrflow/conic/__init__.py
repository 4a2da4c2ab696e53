from .program import (FREE, NONNEG, SOC, ConeBlock, ConeProgram,
                      ProgramBuilder, ProgramError, extend_with_bounds)
from .solver import (INFEASIBLE, ITERATION_LIMIT, NUMERICAL_FAILURE, OPTIMAL,
                     UNBOUNDED, ConeSolution, SolveOptions, SolverError,
                     kkt_residuals, solve_socp)

__all__ = [
    "FREE", "NONNEG", "SOC", "ConeBlock", "ConeProgram", "ProgramBuilder",
    "ProgramError", "extend_with_bounds", "ConeSolution", "SolveOptions",
    "SolverError", "solve_socp", "kkt_residuals", "OPTIMAL", "INFEASIBLE",
    "UNBOUNDED", "ITERATION_LIMIT", "NUMERICAL_FAILURE",
]
