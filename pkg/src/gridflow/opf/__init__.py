from .dcopf import DispatchResult, OpfModelError, build_dcopf, run_dcopf
from .lp import LinearProgram, LpBuilder, LpSolution, LpStatus, export_lp
from .simplex import dual_objective, solve_lp

__all__ = [
    "DispatchResult",
    "LinearProgram",
    "LpBuilder",
    "LpSolution",
    "LpStatus",
    "OpfModelError",
    "build_dcopf",
    "dual_objective",
    "export_lp",
    "run_dcopf",
    "solve_lp",
]
