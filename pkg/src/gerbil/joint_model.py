"""Posterior draws of the per-column regression models and their assembly
into the mean vector and covariance matrix of the latent joint distribution.

Each latent column is regressed on an allowed subset of the columns before
it.  One sweep pass over a single cross-product matrix serves all of those
regressions; drawing the residual variance from its inverse chi-square
posterior and the coefficients from their conditional Gaussian then gives a
parameter draw for the whole joint model.  Because the joint covariance is
built from conditional models with positive residual variances, it is
positive definite by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import PredictorPolicy
from .errors import EstimationError
from .sweep import SymMatrix, cholesky_lower, extract_regression

__all__ = [
    "ConditionalModel",
    "JointParams",
    "ConditionalMoments",
    "ConditionalSolver",
    "draw_conditional_models",
    "assemble_joint",
    "conditional_moments",
]


@dataclass(frozen=True)
class ConditionalModel:
    """Linear model of one latent column given its allowed predecessors.

    ``beta`` holds the intercept first, then one coefficient per predictor in
    ascending column order.  ``sigma`` is the residual standard deviation and
    equals 1 exactly for binary targets.
    """

    target: int
    predictors: tuple[int, ...]
    beta: np.ndarray
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise EstimationError(f"column {self.target}: sigma must be positive")
        if len(self.beta) != len(self.predictors) + 1:
            raise EstimationError(f"column {self.target}: beta length mismatch")
        if any(i >= self.target for i in self.predictors):
            raise EstimationError(
                f"column {self.target}: predictors must precede the target"
            )

    @property
    def kappa(self) -> int:
        return len(self.predictors) + 1


@dataclass(frozen=True)
class JointParams:
    """Mean vector and covariance matrix of the latent joint distribution."""

    mu: np.ndarray
    sigma: np.ndarray

    @property
    def q(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class ConditionalMoments:
    """Mean and variance of one latent column given all the others."""

    mean: float
    variance: float


def _crossprod_with_intercept(latent: np.ndarray) -> SymMatrix:
    """Cross-product matrix of ``[1, Z]``; index 0 is the intercept column."""
    n, q = latent.shape
    a = np.empty((q + 1, q + 1))
    a[0, 0] = n
    a[0, 1:] = a[1:, 0] = latent.sum(axis=0)
    a[1:, 1:] = latent.T @ latent
    return SymMatrix(a, copy=False)


def _sweep_plan(policy: PredictorPolicy):
    """Per-target sweep transitions (reverse these, sweep those, read here),
    derived once from the policy and cached on it; matrix index 0 is the
    intercept and column ``i`` sits at matrix index ``i + 1``."""
    plan = getattr(policy, "_sweep_plan_cache", None)
    if plan is None:
        plan = []
        prev = np.zeros(policy.q + 1, dtype=bool)
        prev[0] = True
        for j in range(policy.q):
            want = np.zeros(policy.q + 1, dtype=bool)
            want[0] = True
            want[1:] = policy.allow[j]
            plan.append(
                (
                    np.flatnonzero(prev & ~want),
                    np.flatnonzero(want & ~prev),
                    np.flatnonzero(want),
                    tuple(policy.predictors_of(j)),
                )
            )
            prev = want
        policy._sweep_plan_cache = plan
    return plan


def draw_conditional_models(
    latent: np.ndarray,
    policy: PredictorPolicy,
    kinds,
    rng: np.random.Generator,
) -> list[ConditionalModel]:
    """Draw regression parameters for every column from one completed latent matrix.

    The cross-product matrix is swept across columns in order; predictors a
    policy excludes are swept back out before the target is read, so each
    extraction sees exactly its own design.  Residual variances come from the
    scaled inverse chi-square posterior (a chi-square draw realized through
    the gamma distribution), except for binary targets where the residual
    variance is pinned to 1; coefficients are then drawn from their Gaussian
    conditional via a Cholesky factor of ``(X'X)^{-1}``.
    """
    latent = np.asarray(latent, dtype=float)
    n, q = latent.shape
    if policy.q != q:
        raise EstimationError(f"policy is for q={policy.q}, latent has q={q}")
    if np.isnan(latent).any():
        raise EstimationError("latent matrix must be complete")

    mat = _crossprod_with_intercept(latent)
    total_ss = np.diag(mat.values).copy()
    mat.sweep(0)
    models: list[ConditionalModel] = []
    for j, (to_reverse, to_sweep, pred_cols, predictors) in enumerate(_sweep_plan(policy)):
        for k in to_reverse:
            mat.reverse_sweep(k)
        for k in to_sweep:
            mat.sweep(k)

        beta_hat, s2, xtx_inv = extract_regression(mat, j + 1, n, predictors=pred_cols)
        kappa = len(beta_hat)
        if kinds[j] == "binary":
            sigma = 1.0
        else:
            if s2 * (n - kappa) <= 1e-10 * total_ss[j + 1]:
                raise EstimationError(
                    f"column {j}: zero residual variance (exact linear fit); "
                    "the predictor set is degenerate"
                )
            dof = n - kappa
            sigma = float(np.sqrt(dof * s2 / rng.gamma(dof / 2.0, 2.0)))
        chol = cholesky_lower(xtx_inv)
        beta = beta_hat + sigma * (chol @ rng.standard_normal(kappa))
        models.append(ConditionalModel(j, predictors, beta, sigma))
    return models


def assemble_joint(models: list[ConditionalModel]) -> JointParams:
    """Build the joint mean and covariance from the column-wise models.

    Means propagate through the regressions; the covariance grows one column
    at a time from the law of total covariance, with zero coefficients in the
    slots of policy-excluded predictors.
    """
    q = len(models)
    if [m.target for m in models] != list(range(q)):
        raise EstimationError("models must cover columns 0..q-1 in order")
    mu = np.zeros(q)
    sig = np.zeros((q, q))
    for j, mdl in enumerate(models):
        btil = np.zeros(j)
        if mdl.predictors:
            btil[list(mdl.predictors)] = mdl.beta[1:]
        mu[j] = mdl.beta[0] + btil @ mu[:j]
        col = sig[:j, :j] @ btil
        sig[:j, j] = col
        sig[j, :j] = col
        sig[j, j] = mdl.sigma**2 + btil @ col
    return JointParams(mu, sig)


class ConditionalSolver:
    """Per-column conditional moments of one joint parameter draw.

    The covariance is fully swept once; reverse-sweeping column ``j`` of the
    result exposes that column's regression weights and residual variance.
    Only the pivot column of the reverse sweep is ever read, so all q columns
    are materialized in one vectorized pass over the swept matrix.
    """

    def __init__(self, params: JointParams):
        self.mu = params.mu
        swept = SymMatrix(params.sigma).sweep_all().values
        d = np.diag(swept)
        self._variances = -1.0 / d
        if not (self._variances > 0.0).all():
            bad = int(np.flatnonzero(self._variances <= 0.0)[0])
            raise EstimationError(
                f"conditional variance of column {bad} is not positive; "
                "the joint covariance is numerically singular"
            )
        self._weights = -swept / d[np.newaxis, :]
        np.fill_diagonal(self._weights, 0.0)

    def weights(self, j: int) -> tuple[np.ndarray, float]:
        """Regression weights of column ``j`` on the others and the residual
        variance; the weight vector is full length with a zero at ``j``."""
        return self._weights[:, j], float(self._variances[j])


def conditional_moments(params: JointParams, j: int, z_other) -> ConditionalMoments:
    """Moments of latent column ``j`` given current values of all others.

    ``z_other`` lists the other q-1 latent values in column order.
    """
    z_other = np.asarray(z_other, dtype=float)
    if len(z_other) != params.q - 1:
        raise EstimationError(f"expected {params.q - 1} conditioning values")
    w, var = ConditionalSolver(params).weights(j)
    z_full = np.insert(z_other, j, 0.0)
    mean = params.mu[j] + w @ (z_full - params.mu)
    return ConditionalMoments(float(mean), float(var))
