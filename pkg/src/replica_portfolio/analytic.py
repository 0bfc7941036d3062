"""Closed-form predictions for the minimal risk and concentration.

Quenched values average the optimum over random return matrices; annealed
values optimize the averaged risk (the classical operations-research answer).
All formulas depend on the variance distribution only through
``m1 = <1/s>`` and ``m2 = <1/s^2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike

from .core import Portfolio
from .variance_model import InverseMoments


class DomainError(ValueError):
    """Scenario ratio outside the range where the optimum is unique (alpha <= 1)."""


def _check_alpha(alpha: float) -> None:
    if not alpha > 1:
        raise DomainError(
            f"alpha = p/N must exceed 1 (got {alpha}); the optimal portfolio is not unique otherwise"
        )


def quenched_epsilon(alpha: float, m: InverseMoments) -> float:
    _check_alpha(alpha)
    return (alpha - 1) / (2 * m.m1)


def quenched_qw(alpha: float, m: InverseMoments) -> float:
    _check_alpha(alpha)
    return m.m2 / m.m1**2 + 1 / (alpha - 1)


def annealed_epsilon(alpha: float, m: InverseMoments) -> float:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return alpha / (2 * m.m1)


def annealed_qw(m: InverseMoments) -> float:
    return m.m2 / m.m1**2


def annealed_portfolio(s: ArrayLike) -> Portfolio:
    """Inverse-variance weights normalized so that ``sum(w) = N`` exactly."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0 or np.any(s <= 0):
        raise ValueError("variances must be a non-empty vector of positive values")
    inv = 1.0 / s
    return Portfolio(s.size * inv / inv.sum())


def finite_beta_epsilon(alpha: float, m: InverseMoments, beta: float) -> float:
    """Boltzmann-averaged risk per asset at inverse temperature ``beta``."""
    _check_alpha(alpha)
    if not beta > 0:
        raise ValueError("beta must be positive")
    return (alpha - 1) / 2 * (1 / m.m1 + 1 / (beta * (alpha - 1)))


def rs_chi_w(alpha: float, m: InverseMoments, beta: float) -> float:
    """Mean posterior variance of the weights, ``<1/s> / (beta (alpha - 1))``."""
    _check_alpha(alpha)
    if not beta > 0:
        raise ValueError("beta must be positive")
    return m.m1 / (beta * (alpha - 1))


def rs_chi_u(alpha: float, beta: float) -> float:
    """Large-N scenario-side susceptibility ``beta (1 - 1/alpha)``."""
    _check_alpha(alpha)
    return beta * (1 - 1 / alpha)


@dataclass(frozen=True)
class Prediction:
    alpha: float
    epsilon_quenched: float
    qw_quenched: float
    epsilon_annealed: float
    qw_annealed: float
    moments: InverseMoments
    gamma: float = 1.0

    def as_row(self) -> dict[str, float]:
        return {
            "alpha": self.alpha,
            "eps_quenched": self.epsilon_quenched,
            "qw_quenched": self.qw_quenched,
            "eps_annealed": self.epsilon_annealed,
            "qw_annealed": self.qw_annealed,
        }


def predict(alpha: float, m: InverseMoments, gamma: float = 1.0) -> Prediction:
    pred = Prediction(
        alpha=alpha,
        epsilon_quenched=quenched_epsilon(alpha, m),
        qw_quenched=quenched_qw(alpha, m),
        epsilon_annealed=annealed_epsilon(alpha, m),
        qw_annealed=annealed_qw(m),
        moments=m,
    )
    return scaled_prediction(pred, gamma)


def scaled_prediction(pred: Prediction, gamma: float) -> Prediction:
    """Predictions for returns multiplied by ``sqrt(gamma)``.

    Risk is quadratic in the returns, so both risk fields pick up a factor of
    ``gamma``; the budget pins the weights, so concentration is unchanged.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma == 1:
        return pred
    return replace(
        pred,
        epsilon_quenched=pred.epsilon_quenched * gamma,
        epsilon_annealed=pred.epsilon_annealed * gamma,
        gamma=pred.gamma * gamma,
    )


def alpha_grid(alpha_min: float, alpha_max: float, steps: int) -> np.ndarray:
    """Uniform grid on ``[alpha_min, alpha_max]``; every point must exceed 1."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not alpha_min > 1:
        raise DomainError(f"alpha grid must start above 1, got {alpha_min}")
    if alpha_max < alpha_min:
        raise ValueError(f"alpha_max={alpha_max} < alpha_min={alpha_min}")
    if steps == 1:
        return np.array([alpha_min])
    return np.linspace(alpha_min, alpha_max, steps)


def is_sharp_bound(m: InverseMoments, rtol: float = 1e-12) -> bool:
    """True when the concentration attains its lower bound alpha/(alpha-1)."""
    return math.isclose(m.m2, m.m1**2, rel_tol=rtol)
