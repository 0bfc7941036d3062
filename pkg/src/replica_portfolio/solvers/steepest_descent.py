"""Primal-dual gradient iteration on the Lagrangian ``H(w) + zeta (N - e.w)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh

from ..core import ReturnMatrix, SolveReport, SolverId, covariance_matrix
from ._common import Diverged, make_report

# Margin on eigenvalue estimates used to cap the default step sizes.
_STABILITY_MARGIN = 1.1


@dataclass(frozen=True)
class SteepestDescentParams:
    """Step sizes and stopping rule.

    ``eta_w=None`` means ``100/N`` capped at ``1/(1.1 lambda_max)``, and
    ``eta_zeta=None`` means ``1/N`` capped at ``lambda_min/(1.1 N)``, with
    ``lambda`` the eigenvalues of ``J``. The uncapped values are stable only
    when ``N`` is large against ``lambda_max`` and ``lambda_min`` is not small:
    a mode ``v`` of ``J`` oscillates unless ``eta_zeta (e.v)^2 < lambda``.
    """

    eta_w: float | None = None
    eta_zeta: float | None = None
    delta: float = 1e-6
    max_iters: int = 1_000_000
    divergence_cap: float = 1e12

    def __post_init__(self) -> None:
        for name in ("eta_w", "eta_zeta"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.divergence_cap > 0:
            raise ValueError("divergence_cap must be positive")


def extreme_eigenvalues(J: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix (Lanczos for large N)."""
    n = J.shape[0]
    if n <= 32:
        ev = np.linalg.eigvalsh(J)
        return float(ev[0]), float(ev[-1])
    v0 = np.ones(n) / np.sqrt(n)
    lo = eigsh(J, k=1, which="SA", v0=v0, tol=1e-6, return_eigenvectors=False)[0]
    hi = eigsh(J, k=1, which="LA", v0=v0, tol=1e-6, return_eigenvectors=False)[0]
    return float(lo), float(hi)


def resolve_steps(params: SteepestDescentParams, J: np.ndarray) -> tuple[float, float]:
    n = J.shape[0]
    eta_w, eta_zeta = params.eta_w, params.eta_zeta
    if eta_w is None or eta_zeta is None:
        lo, hi = extreme_eigenvalues(J)
        if eta_w is None:
            eta_w = 100.0 / n
            if hi > 0:
                eta_w = min(eta_w, 1.0 / (_STABILITY_MARGIN * hi))
        if eta_zeta is None:
            eta_zeta = 1.0 / n
            # singular J: no stable choice exists, keep the plain default
            if lo > 0:
                eta_zeta = min(1.0, lo / _STABILITY_MARGIN) / n
    return eta_w, eta_zeta


def steepest_descent(
    X: ReturnMatrix, params: SteepestDescentParams | None = None
) -> SolveReport:
    """Iterate from ``w = e, zeta = 1``::

        w    <- w - eta_w (J w - zeta e)
        zeta <- zeta + eta_zeta (N - e.w)

    until the L1 change of ``(w, zeta)`` is at most ``delta``. ``J`` is the
    covariance of the normalized returns, i.e. the gradient of the risk.
    """
    params = params or SteepestDescentParams()
    n = X.n_assets
    J = covariance_matrix(X)
    eta_w, eta_zeta = resolve_steps(params, J)

    w = np.ones(n)
    zeta = 1.0
    change = np.inf
    converged = False
    it = 0
    while it < params.max_iters:
        w_next = w - eta_w * (J @ w - zeta)
        zeta_next = zeta + eta_zeta * (n - w.sum())
        change = abs(zeta_next - zeta) + np.abs(w_next - w).sum()
        w, zeta = w_next, zeta_next
        it += 1
        l1 = np.abs(w).sum()
        if not l1 <= params.divergence_cap:
            raise Diverged(
                f"|w|_1 = {l1:.3g} exceeded {params.divergence_cap:g} after {it} iterations "
                f"with eta_w={eta_w:.3g}; shrink eta_w"
            )
        if change <= params.delta:
            converged = True
            break

    return make_report(
        w,
        X,
        SolverId.STEEPEST_DESCENT,
        iterations=it,
        converged=converged,
        residual=float(change),
        diagnostics={
            "zeta": float(zeta),
            "eta_w": eta_w,
            "eta_zeta": eta_zeta,
            "well_posed": X.well_posed,
        },
    )
