"""Three independent routes to the same optimum: direct solve, steepest
descent on the Lagrangian, and belief propagation."""

from __future__ import annotations

from typing import Union

from ..core import ReturnMatrix, SolveReport, SolverId
from ._common import Diverged, NumericalBreakdown, SingularCovariance, SolverError
from .belief_propagation import ZERO_TEMPERATURE, BPParams, belief_propagation
from .exact import exact_solve
from .steepest_descent import SteepestDescentParams, steepest_descent

SolverParams = Union[SteepestDescentParams, BPParams, None]

_ALIASES = {
    "exact": SolverId.EXACT,
    "sd": SolverId.STEEPEST_DESCENT,
    "steepest_descent": SolverId.STEEPEST_DESCENT,
    "bp": SolverId.BELIEF_PROPAGATION,
    "belief_propagation": SolverId.BELIEF_PROPAGATION,
}


def parse_method(method: str | SolverId) -> SolverId:
    if isinstance(method, SolverId):
        return method
    try:
        return _ALIASES[method.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown solver {method!r}; choose exact, sd or bp") from None


def solve(X: ReturnMatrix, method: str | SolverId = SolverId.EXACT, params: SolverParams = None) -> SolveReport:
    method = parse_method(method)
    if method is SolverId.EXACT:
        return exact_solve(X)
    if method is SolverId.STEEPEST_DESCENT:
        if params is not None and not isinstance(params, SteepestDescentParams):
            raise TypeError("steepest descent takes SteepestDescentParams")
        return steepest_descent(X, params)
    if params is not None and not isinstance(params, BPParams):
        raise TypeError("belief propagation takes BPParams")
    return belief_propagation(X, params)


__all__ = [
    "BPParams",
    "Diverged",
    "NumericalBreakdown",
    "SingularCovariance",
    "SolverError",
    "SolverParams",
    "SteepestDescentParams",
    "ZERO_TEMPERATURE",
    "belief_propagation",
    "exact_solve",
    "parse_method",
    "solve",
    "steepest_descent",
]
