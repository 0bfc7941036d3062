"""Direct solve of the budget-constrained minimum-risk portfolio."""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

from ..core import ReturnMatrix, SolveReport, SolverId, covariance_matrix
from ._common import SingularCovariance, make_report

#: Reciprocal condition numbers below this are treated as singular.
RCOND_MIN = 1e-12


def exact_solve(X: ReturnMatrix, rcond_min: float = RCOND_MIN) -> SolveReport:
    """``w = N J^-1 e / (e^T J^-1 e)`` via a Cholesky factorization of ``J``.

    ``J^-1 e`` is the only solve needed: ``e^T J^-2 e = |J^-1 e|^2``.
    The closed-form risk and concentration are stored in ``diagnostics`` next
    to the values recomputed from the portfolio, as a consistency check.
    """
    n = X.n_assets
    J = covariance_matrix(X)
    try:
        factor = cho_factor(J, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularCovariance(
            f"covariance matrix (N={n}, p={X.n_scenarios}) is not positive definite"
        ) from exc
    anorm = float(np.abs(J).sum(axis=0).max())
    rcond, info = dpocon(factor[0], anorm, uplo="L")
    if info != 0 or not rcond >= rcond_min:
        raise SingularCovariance(
            f"covariance matrix is ill-conditioned (rcond={rcond:.3g} < {rcond_min:g})"
        )

    y = cho_solve(factor, np.ones(n), check_finite=False)
    eJe = y.sum() / n  # (1/N) e^T J^-1 e
    eJJe = (y @ y) / n  # (1/N) e^T J^-2 e
    w = y / eJe
    return make_report(
        w,
        X,
        SolverId.EXACT,
        iterations=0,
        converged=True,
        residual=0.0,
        diagnostics={
            "epsilon_closed_form": float(1 / (2 * eJe)),
            "qw_closed_form": float(eJJe / eJe**2),
            "multiplier": float(1 / eJe),
            "rcond": float(rcond),
        },
    )
