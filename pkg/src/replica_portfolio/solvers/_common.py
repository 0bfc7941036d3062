from __future__ import annotations

from typing import Any

import numpy as np

from ..core import Portfolio, ReturnMatrix, SolveReport, SolverId, concentration, risk_per_asset


class SolverError(RuntimeError):
    """Base class for solver failures."""


class SingularCovariance(SolverError):
    pass


class Diverged(SolverError):
    pass


class NumericalBreakdown(SolverError):
    pass


def make_report(
    w: np.ndarray,
    X: ReturnMatrix,
    solver: SolverId,
    *,
    iterations: int,
    converged: bool,
    residual: float,
    diagnostics: dict[str, Any] | None = None,
) -> SolveReport:
    portfolio = Portfolio(w)
    return SolveReport(
        portfolio=portfolio,
        epsilon=risk_per_asset(portfolio, X),
        q_w=concentration(portfolio),
        iterations=iterations,
        converged=converged,
        solver_id=solver,
        residual=float(residual),
        diagnostics=dict(diagnostics or {}),
    )
