"""Desk-scale LP/MILP solving: bounded-variable simplex, branch-and-bound, MPS I/O."""

from .bnb import MilpSolution, SolverError, relative_gap, solve_milp
from .model import MilpModel, ModelBuilder, check_solution
from .mps import MpsParseError, export_mps, import_mps
from .simplex import LpNumericalError, LpSolution, solve_lp

__all__ = [
    "LpNumericalError", "LpSolution", "MilpModel", "MilpSolution", "ModelBuilder", "MpsParseError",
    "SolverError", "check_solution", "export_mps", "import_mps", "relative_gap", "solve_lp", "solve_milp",
]
