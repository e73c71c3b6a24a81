"""Penalty homotopy solver for quadratic programs with linear complementarity constraints."""

from .certificates import (ActiveSets, OracleResult, branch_enumerate, classify_active_sets,
                           penalty_bound, switch_duals, verify_strong_stationarity)
from .model import LcqpProblem, PenaltyStructure, stack, validate
from .qp import NotPositiveDefiniteError, QpStatus, QpWorkspace, solve_qp
from .solver import LcqpSolver, Solution, SolverOptions, SolverStatus, solve

__all__ = [
    "ActiveSets", "LcqpProblem", "LcqpSolver", "NotPositiveDefiniteError", "OracleResult",
    "PenaltyStructure", "QpStatus", "QpWorkspace", "Solution", "SolverOptions", "SolverStatus",
    "branch_enumerate", "classify_active_sets", "penalty_bound", "solve", "solve_qp", "stack",
    "switch_duals", "validate", "verify_strong_stationarity",
]
