"""Self-contained LP/MILP solver: bounded-variable primal simplex with
presolve reductions, plus depth-first branch-and-bound over binaries."""

from .model import LinearProgram, LpSolution, dump_lp
from .params import SolverParams
from .milp import DEFAULT_PARAMS, NodeLimitError, solve_lp, solve_milp
from .simplex import LpError, NumericalBreakdownError

__all__ = [
    "LinearProgram",
    "LpSolution",
    "SolverParams",
    "DEFAULT_PARAMS",
    "solve_lp",
    "solve_milp",
    "dump_lp",
    "LpError",
    "NumericalBreakdownError",
    "NodeLimitError",
]
