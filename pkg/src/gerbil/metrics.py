"""Multiple-imputation pooling, interval coverage, rMSE, and the analysis
models fit to completed datasets in the simulation study."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import norm, t as t_dist

from .errors import EstimationError

__all__ = [
    "PooledEstimate",
    "pool",
    "ci_covers",
    "rmse",
    "fit_linear",
    "fit_logistic",
]


@dataclass(frozen=True)
class PooledEstimate:
    """Combined estimate across m imputations.

    ``total`` adds the between-imputation variance (inflated by 1 + 1/m) to
    the average within-imputation variance; ``df`` are the classical pooling
    degrees of freedom.  When the imputations agree exactly the between part
    is zero and ``df`` degrades to infinity, i.e. a plain normal interval.
    """

    qbar: float
    within: float
    between: float
    total: float
    df: float


def pool(estimates, variances) -> PooledEstimate:
    """Combine per-imputation estimates and their squared standard errors."""
    est = np.asarray(estimates, dtype=float)
    var = np.asarray(variances, dtype=float)
    m = len(est)
    if m < 2:
        raise EstimationError("pooling needs at least two imputations")
    if len(var) != m:
        raise EstimationError("estimates and variances must have equal length")
    if (var < 0).any():
        raise EstimationError("variances must be non-negative")
    qbar = float(est.mean())
    within = float(var.mean())
    between = float(est.var(ddof=1))
    if between == 0.0:
        return PooledEstimate(qbar, within, 0.0, within, np.inf)
    inflated = (1.0 + 1.0 / m) * between
    total = within + inflated
    df = (m - 1) * (1.0 + within / inflated) ** 2
    return PooledEstimate(qbar, within, between, total, float(df))


def ci_covers(p: PooledEstimate, theta: float, alpha: float = 0.05) -> bool:
    """Whether ``theta`` lies in the pooled t interval at level ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise EstimationError("alpha must be in (0, 1)")
    if np.isinf(p.df):
        crit = norm.ppf(1.0 - alpha / 2.0)
    else:
        crit = t_dist.ppf(1.0 - alpha / 2.0, p.df)
    return bool(abs(theta - p.qbar) <= crit * np.sqrt(p.total))


def rmse(estimates, theta: float) -> float:
    """Root-mean-squared deviation of replication estimates from the truth."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise EstimationError("need at least one estimate")
    return float(np.sqrt(np.mean((est - theta) ** 2)))


def fit_linear(y, x):
    """Ordinary least squares with classical coefficient variances.

    Returns the coefficients and the diagonal of ``s^2 (X'X)^{-1}``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    if n <= k:
        raise EstimationError(f"{n} rows cannot identify {k} coefficients")
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < k:
        raise EstimationError("design matrix is rank deficient")
    resid = y - x @ coef
    s2 = resid @ resid / (n - k)
    xtx_inv = np.linalg.inv(x.T @ x)
    return coef, s2 * np.diag(xtx_inv)


def fit_logistic(y, x, max_iter: int = 50, tol: float = 1e-8):
    """Maximum-likelihood logistic regression via iteratively reweighted
    least squares.

    Converged when the largest score component falls below ``tol``; reports
    separation or non-convergence instead of returning a drifting fit.
    Returns the coefficients and the diagonal of the inverse observed
    information.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    if not np.isin(y, (0.0, 1.0)).all():
        raise EstimationError("outcome must be binary 0/1")
    beta = np.zeros(k)
    info = None
    for _ in range(max_iter):
        eta = x @ beta
        p = expit(eta)
        score = x.T @ (y - p)
        w = p * (1.0 - p)
        info = (x * w[:, None]).T @ x
        if np.abs(score).max() < tol:
            break
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise EstimationError(
                "information matrix is singular (rank-deficient design)"
            ) from None
        beta = beta + step
        if np.abs(beta).max() > 1e2:
            raise EstimationError(
                "coefficients diverged; the classes appear perfectly separated"
            )
    else:
        raise EstimationError(f"no convergence in {max_iter} IRLS iterations")
    return beta, np.diag(np.linalg.inv(info))
