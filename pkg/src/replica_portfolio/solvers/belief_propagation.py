"""Message passing between asset and scenario nodes.

The per-node equations, with ``A = X^T / sqrt(N)`` and ``x2 = x^2 / N``::

    m_w = chi_w (h_w + k)           h_w = A^T m_u + chit_w m_w
    chit_w = x2 chi_u               chi_w = 1 / chit_w
    m_u = -chi_u h_u                h_u = A m_w - chit_u m_u
    chit_u = x2^T chi_w             chi_u = beta / (1 + beta chit_u)

Substituting ``chi_w = v_w / beta``, ``chi_u = beta c_u``, ``k = beta kappa``
and ``m_u = beta n_u`` removes ``beta`` from every equation, so the iteration
runs on the rescaled quantities and ``beta`` only enters the reported
susceptibilities. This also gives the zero-temperature limit without
overflow. Any fixed point satisfies ``J m_w = kappa e``, i.e. it is the
exact optimum once the budget holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ReturnMatrix, SolveReport, SolverId
from ._common import NumericalBreakdown, make_report

ZERO_TEMPERATURE = math.inf


@dataclass(frozen=True)
class BPParams:
    """``k_update`` is ``"project"`` (solve for the ``kappa`` that puts the
    fresh ``m_w`` exactly on budget) or ``"gradient"`` (``kappa += k_step
    (N - sum m_w)`` each sweep, ``k_step=None`` meaning ``1/N``). The gradient
    rule oscillates once ``k_step * sum(chi_w)`` is of order 2, which happens
    near alpha = 1 with strongly dispersed variances."""

    beta: float = ZERO_TEMPERATURE
    damping: float = 0.5
    delta: float = 1e-6
    max_iters: int = 100_000
    k_step: float | None = None
    k_update: str = "project"

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive (use math.inf for zero temperature)")
        if not 0 <= self.damping < 1:
            raise ValueError("damping must lie in [0, 1)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.k_step is not None and not self.k_step > 0:
            raise ValueError("k_step must be positive")
        if self.k_update not in ("gradient", "project"):
            raise ValueError(f"k_update must be 'gradient' or 'project', got {self.k_update!r}")


def belief_propagation(X: ReturnMatrix, params: BPParams | None = None) -> SolveReport:
    params = params or BPParams()
    n, p = X.n_assets, X.n_scenarios
    x = X.entries
    A = x.T / np.sqrt(n)
    x2 = x**2 / n
    d = params.damping
    k_step = params.k_step if params.k_step is not None else 1.0 / n

    m_w = np.ones(n)
    n_u = np.zeros(p)
    v_w = np.ones(n)
    c_u = None
    kappa = 0.0

    change = np.inf
    converged = False
    it = 0
    while it < params.max_iters:
        # scenario side
        chit_u = x2.T @ v_w
        c_new = 1.0 / (1.0 + chit_u)
        h_u = A @ m_w - chit_u * n_u
        n_u_new = -c_new * h_u
        c_u = c_new if c_u is None else d * c_u + (1 - d) * c_new
        n_u_next = d * n_u + (1 - d) * n_u_new

        # asset side
        chit_w = x2 @ c_u
        if not np.all(chit_w > 0):
            bad = int(np.argmin(chit_w))
            raise NumericalBreakdown(
                f"non-positive cavity precision {chit_w[bad]:.3g} at asset {bad}"
                " (all-zero return row?)"
            )
        v_new = 1.0 / chit_w
        h_w = A.T @ n_u_next + chit_w * m_w
        if params.k_update == "project":
            kappa = (n - v_new @ h_w) / v_new.sum()
        else:
            kappa += k_step * (n - m_w.sum())
        m_w_new = v_new * (h_w + kappa)
        v_w = d * v_w + (1 - d) * v_new
        m_w_next = d * m_w + (1 - d) * m_w_new

        if not (np.all(np.isfinite(m_w_next)) and np.all(np.isfinite(n_u_next))):
            raise NumericalBreakdown(f"messages became non-finite after {it + 1} sweeps")
        change = float(np.abs(m_w_next - m_w).sum() + np.abs(n_u_next - n_u).sum())
        m_w, n_u = m_w_next, n_u_next
        it += 1
        if change <= params.delta:
            converged = True
            break

    beta = params.beta
    diagnostics = {
        "beta": beta if math.isfinite(beta) else "inf",
        "kappa": float(kappa),
        "chi_w_scaled_mean": float(v_w.mean()),
        "chi_u_scaled_mean": float(c_u.mean()),
    }
    if math.isfinite(beta):
        diagnostics["chi_w_mean"] = float(v_w.mean() / beta)
        diagnostics["chi_u_mean"] = float(c_u.mean() * beta)
        diagnostics["k"] = float(kappa * beta)
    return make_report(
        m_w,
        X,
        SolverId.BELIEF_PROPAGATION,
        iterations=it,
        converged=converged,
        residual=change,
        diagnostics=diagnostics,
    )
