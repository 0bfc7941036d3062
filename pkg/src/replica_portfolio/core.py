"""Portfolio and return-matrix types plus the two portfolio statistics.

Return entries are stored raw (``x[i, mu]`` has variance ``s_i``); the
``1/sqrt(N)`` normalization lives inside :func:`risk_per_asset` and
:func:`covariance_matrix` only.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

#: Budget tolerance (relative to N) for iterative-solver output.
ITERATIVE_BUDGET_TOL = 1e-6
#: Budget tolerance (relative to N) for the direct linear solve.
EXACT_BUDGET_TOL = 1e-10


class IllPosedWarning(UserWarning):
    """Raised (as a warning) for matrices with p <= N, where the optimum is not unique."""


def _frozen(a: ArrayLike, ndim: int, name: str) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ReturnMatrix:
    """N x p matrix of zero-mean returns with per-asset generating variances."""

    entries: NDArray[np.float64]
    variances: NDArray[np.float64]

    def __post_init__(self) -> None:
        entries = _frozen(self.entries, 2, "entries")
        variances = _frozen(self.variances, 1, "variances")
        if entries.shape[0] != variances.shape[0]:
            raise ValueError(
                f"{entries.shape[0]} assets but {variances.shape[0]} variances"
            )
        if entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ValueError("return matrix must have at least one asset and one scenario")
        if not np.all(np.isfinite(variances)) or np.any(variances <= 0):
            raise ValueError("variances must be strictly positive and finite")
        if not np.all(np.isfinite(entries)):
            raise ValueError("return entries must be finite")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "variances", variances)
        if not self.well_posed:
            warnings.warn(
                f"p={self.n_scenarios} <= N={self.n_assets}: optimal portfolio is not unique",
                IllPosedWarning,
                stacklevel=3,
            )

    @property
    def n_assets(self) -> int:
        return self.entries.shape[0]

    @property
    def n_scenarios(self) -> int:
        return self.entries.shape[1]

    @property
    def alpha(self) -> float:
        """Scenario ratio p/N."""
        return self.n_scenarios / self.n_assets

    @property
    def well_posed(self) -> bool:
        return self.n_scenarios > self.n_assets


@dataclass(frozen=True)
class Portfolio:
    """Investment ratios ``w``; the budget is sum(w) = N and short positions are allowed."""

    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        weights = _frozen(self.weights, 1, "weights")
        if weights.size == 0:
            raise ValueError("portfolio must hold at least one asset")
        object.__setattr__(self, "weights", weights)

    @property
    def n_assets(self) -> int:
        return self.weights.size

    def satisfies_budget(self, rel_tol: float = ITERATIVE_BUDGET_TOL) -> bool:
        return budget_residual(self) <= rel_tol * self.n_assets


PortfolioLike = Union[Portfolio, ArrayLike]


class SolverId(str, enum.Enum):
    EXACT = "exact"
    STEEPEST_DESCENT = "steepest_descent"
    BELIEF_PROPAGATION = "belief_propagation"


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solver run.

    ``epsilon`` and ``q_w`` are always recomputed from the returned portfolio,
    never copied from solver internals. ``residual`` is the final value of the
    solver's own stopping metric (0 for the direct solve).
    """

    portfolio: Portfolio
    epsilon: float
    q_w: float
    iterations: int
    converged: bool
    solver_id: SolverId
    residual: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def budget_residual(self) -> float:
        return budget_residual(self.portfolio)

    def to_dict(self) -> dict[str, Any]:
        return {
            "solver": self.solver_id.value,
            "epsilon": self.epsilon,
            "q_w": self.q_w,
            "budget_residual": self.budget_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "diagnostics": self.diagnostics,
        }


def _weights(w: PortfolioLike) -> NDArray[np.float64]:
    if isinstance(w, Portfolio):
        return w.weights
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"weights must be a non-empty vector, got shape {arr.shape}")
    return arr


def _entries(X: ReturnMatrix | ArrayLike) -> NDArray[np.float64]:
    if isinstance(X, ReturnMatrix):
        return X.entries
    return np.asarray(X, dtype=np.float64)


def risk_per_asset(w: PortfolioLike, X: ReturnMatrix | ArrayLike) -> float:
    """Investment risk per asset, ``(1/2N) sum_mu ((1/sqrt N) sum_i x_imu w_i)^2``."""
    weights = _weights(w)
    x = _entries(X)
    if x.ndim != 2 or x.shape[0] != weights.size:
        raise ValueError(
            f"portfolio has {weights.size} assets but return matrix has shape {x.shape}"
        )
    n = weights.size
    projected = weights @ x / np.sqrt(n)
    return float(0.5 * (projected @ projected) / n)


def concentration(w: PortfolioLike) -> float:
    """Concentrated investment level ``(1/N) sum_i w_i^2``."""
    weights = _weights(w)
    return float(weights @ weights / weights.size)


def covariance_matrix(X: ReturnMatrix | ArrayLike) -> NDArray[np.float64]:
    """``J_ij = (1/N) sum_mu x_imu x_jmu``; symmetrized to remove round-off asymmetry."""
    x = _entries(X)
    J = x @ x.T / x.shape[0]
    return 0.5 * (J + J.T)


def budget_residual(w: PortfolioLike) -> float:
    weights = _weights(w)
    return float(abs(weights.sum() - weights.size))


# -- CSV exchange format --------------------------------------------------


def write_matrix_csv(X: ReturnMatrix, path: str | Path) -> None:
    """One row per asset, p comma-separated entries."""
    np.savetxt(path, X.entries, delimiter=",", fmt="%.17g")


def write_variances(X: ReturnMatrix, path: str | Path) -> None:
    np.savetxt(path, X.variances, fmt="%.17g")


def read_return_matrix(
    matrix_path: str | Path, variances_path: str | Path | None = None
) -> ReturnMatrix:
    """Load a matrix CSV and optional variances file.

    Without a variances file the per-row sample second moments stand in for
    the generating variances.
    """
    entries = np.loadtxt(matrix_path, delimiter=",", dtype=np.float64, ndmin=2)
    if variances_path is None:
        variances = np.mean(entries**2, axis=1)
    else:
        variances = np.loadtxt(variances_path, dtype=np.float64, ndmin=1)
    return ReturnMatrix(entries, variances)
