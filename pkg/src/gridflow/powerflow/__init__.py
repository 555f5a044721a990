from ._common import (
    BusTyping,
    Method,
    Mismatch,
    PowerFlowOptions,
    PowerFlowSolution,
    branch_flows,
    compute_jacobian,
    compute_mismatch,
    prepare,
)
from .ac import SingularJacobianError, fdlf_matrices, solve
from .dc import make_bdc, solve_dc

__all__ = [
    "BusTyping",
    "Method",
    "Mismatch",
    "PowerFlowOptions",
    "PowerFlowSolution",
    "SingularJacobianError",
    "branch_flows",
    "compute_jacobian",
    "compute_mismatch",
    "fdlf_matrices",
    "make_bdc",
    "prepare",
    "solve",
    "solve_dc",
]
