"""The MCMC core: truncated-normal sampling, chain initialization, Gibbs
updates of the latent matrix, the alternating parameter/imputation loop,
back-transformation, and multiple-imputation orchestration.

Each chain keeps an ``(n, q)`` latent matrix.  Latent cells behind observed
continuous values are fixed once and never move; every other cell is redrawn
each iteration from its conditional normal, truncated to the interval the
observed value dictates (a sign constraint for binary cells, a cutpoint
interval for ordinal cells, nothing for missing cells).  After the burn-in
the final latent matrix is pushed back through the marginal maps and the
observed cells are restored verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

from .data_model import (
    MixedDataset,
    PredictorPolicy,
    check_policy_feasible,
    default_predictor_policy,
)
from .encoding import ExpandedDataset, collapse, expand
from .errors import ChainError, DataError, GerbilError
from .joint_model import (
    ConditionalSolver,
    JointParams,
    assemble_joint,
    draw_conditional_models,
)
from .marginal import ContinuousTransform, CutpointSet, fit_continuous, fit_cutpoints

__all__ = [
    "ImputationConfig",
    "ChainState",
    "truncated_normal",
    "chain_rng",
    "init_chain",
    "gibbs_update_column",
    "run_chain",
    "impute",
]

# standardized bounds beyond this go through the tail-safe samplers
_TAIL = 6.0
_PMIN = 1e-300
_PMAX = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


def _tail_rejection(rng: np.random.Generator, lo: np.ndarray) -> np.ndarray:
    """Standard-normal draws conditioned to (lo, inf) for large lo.

    Shifted-exponential proposal with the optimal rate; the acceptance
    probability is essentially 1 this far out, so the loop ends quickly and
    never stalls the way naive redraw-until-accepted sampling would.
    """
    rate = (lo + np.sqrt(lo * lo + 4.0)) / 2.0
    out = np.empty_like(lo)
    todo = np.arange(len(lo))
    while todo.size:
        x = lo[todo] + rng.exponential(size=todo.size) / rate[todo]
        keep = rng.random(todo.size) <= np.exp(-0.5 * (x - rate[todo]) ** 2)
        out[todo[keep]] = x[keep]
        todo = todo[~keep]
    return out


def _log_tail_inverse(u: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw on (lo, hi) computed in log survival space.

    Serves intervals stuck in the far right tail, where the plain probability
    difference would cancel to zero.
    """
    la = log_ndtr(-lo)
    lb = log_ndtr(-hi)  # -inf when hi is +inf
    log_s = la + np.log1p(u * np.expm1(lb - la))
    return -ndtri_exp(log_s)


def _nudge_inside(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Rounding can land a draw exactly on a finite endpoint; move it strictly
    inside its interval."""
    low_hit = (z <= lo) & np.isfinite(lo)
    if low_hit.any():
        z[low_hit] = np.nextafter(lo[low_hit], np.inf)
    high_hit = (z >= hi) & np.isfinite(hi)
    if high_hit.any():
        z[high_hit] = np.nextafter(hi[high_hit], -np.inf)
    return z


def _trunc_std(
    u: np.ndarray, lo: np.ndarray, hi: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One standard-normal draw per entry of ``u``, conditioned to (lo, hi).

    Moderate intervals go through the inverse CDF in probability space;
    intervals entirely beyond +-6 standard deviations switch to rejection
    sampling (one-sided) or a log-space inverse CDF (two-sided), so extreme
    conditioning still yields finite, correctly located draws.
    """
    upper_tail = lo >= _TAIL
    lower_tail = hi <= -_TAIL
    if not upper_tail.any() and not lower_tail.any():
        pa = ndtr(lo)
        pb = ndtr(hi)
        z = ndtri(np.clip(pa + u * (pb - pa), _PMIN, _PMAX))
        return _nudge_inside(z, lo, hi)

    z = np.empty_like(u)
    mid = ~(upper_tail | lower_tail)
    if mid.any():
        pa = ndtr(lo[mid])
        pb = ndtr(hi[mid])
        z[mid] = ndtri(np.clip(pa + u[mid] * (pb - pa), _PMIN, _PMAX))

    if upper_tail.any():
        sel = np.flatnonzero(upper_tail)
        unbounded = np.isinf(hi[sel])
        if unbounded.any():
            z[sel[unbounded]] = _tail_rejection(rng, lo[sel[unbounded]])
        if (~unbounded).any():
            s = sel[~unbounded]
            z[s] = _log_tail_inverse(u[s], lo[s], hi[s])

    if lower_tail.any():
        sel = np.flatnonzero(lower_tail)
        unbounded = np.isinf(lo[sel])
        if unbounded.any():
            z[sel[unbounded]] = -_tail_rejection(rng, -hi[sel[unbounded]])
        if (~unbounded).any():
            s = sel[~unbounded]
            z[s] = -_log_tail_inverse(u[s], -hi[s], -lo[s])

    return _nudge_inside(z, lo, hi)


def truncated_normal(
    rng: np.random.Generator,
    mean,
    variance,
    lower=-np.inf,
    upper=np.inf,
    size: int | None = None,
):
    """Exact draws from a normal distribution conditioned to (lower, upper).

    Parameters broadcast against each other; ``size`` replicates scalar
    parameters.  Bounds may be infinite.  Returns a scalar when every input
    is scalar and ``size`` is None.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if (variance <= 0).any():
        raise DataError("variance must be positive")
    if not (lower < upper).all():
        raise DataError("need lower < upper")
    shape = np.broadcast_shapes(mean.shape, variance.shape, lower.shape, upper.shape)
    if size is not None:
        shape = np.broadcast_shapes(shape, (size,))
    mean, variance, lower, upper = (
        np.broadcast_to(a, shape).astype(float) for a in (mean, variance, lower, upper)
    )
    scalar = shape == ()
    if scalar:
        shape = (1,)
        mean, variance, lower, upper = (
            a.reshape(1) for a in (mean, variance, lower, upper)
        )
    sd = np.sqrt(variance)
    u = rng.random(shape)
    z = _trunc_std(u, (lower - mean) / sd, (upper - mean) / sd, rng)
    out = mean + sd * z
    return float(out[0]) if scalar else out


def chain_rng(seed, chain_index: int) -> np.random.Generator:
    """Chain-local random stream: the seed words are the entropy and the
    chain index the spawn key, so streams are reproducible, independent of
    execution order, and never alias across chain indices."""
    words = [int(seed)] if np.isscalar(seed) else [int(w) for w in seed]
    return np.random.default_rng(
        np.random.SeedSequence(words, spawn_key=(int(chain_index),))
    )


@dataclass(frozen=True)
class ImputationConfig:
    """Settings of one multiple-imputation run."""

    burn_in: int = 60
    m: int = 40
    seed: int | Sequence[int] = 0
    policy: PredictorPolicy | None = None

    def __post_init__(self):
        if self.burn_in < 1 or self.m < 1:
            raise DataError("burn_in and m must be at least 1")


@dataclass
class _ColumnPlan:
    """Per-column row bookkeeping, fixed for the whole chain."""

    kind: str
    missing_rows: np.ndarray | None = None  # continuous only
    observed_rows: np.ndarray | None = None
    fixed_latent: np.ndarray | None = None
    is_one: np.ndarray | None = None  # binary: observed-1 / observed-0 rows
    is_zero: np.ndarray | None = None
    is_missing: np.ndarray | None = None
    lo: np.ndarray | None = None  # ordinal: per-row truncation bounds
    hi: np.ndarray | None = None


@dataclass
class _Prepared:
    transforms: dict[int, ContinuousTransform]
    cutpoints: dict[int, CutpointSet]
    policy: PredictorPolicy
    plans: list[_ColumnPlan]
    kinds: tuple[str, ...]


def _prepare(expanded: ExpandedDataset, policy: PredictorPolicy | None) -> _Prepared:
    """Fit the fixed per-column machinery: marginal maps, truncation bounds,
    and the predictor policy (validated for feasibility)."""
    n = expanded.n
    transforms: dict[int, ContinuousTransform] = {}
    cutpoints: dict[int, CutpointSet] = {}
    plans: list[_ColumnPlan] = []
    for j, spec in enumerate(expanded.schema.columns):
        col = expanded.values[:, j]
        obs = expanded.observed[:, j]
        if spec.kind == "continuous":
            t = fit_continuous(col[obs])
            transforms[j] = t
            plans.append(
                _ColumnPlan(
                    "continuous",
                    missing_rows=np.flatnonzero(~obs),
                    observed_rows=np.flatnonzero(obs),
                    fixed_latent=t.to_latent(col[obs]),
                )
            )
        elif spec.kind == "binary":
            plans.append(
                _ColumnPlan(
                    "binary",
                    is_one=obs & (col == 1.0),
                    is_zero=obs & (col == 0.0),
                    is_missing=~obs,
                )
            )
        else:
            cuts = fit_cutpoints(col[obs], spec.levels)
            cutpoints[j] = cuts
            level = np.where(obs, col, 1.0).astype(int)
            lo, hi = cuts.interval(level)
            lo = np.where(obs, lo, -np.inf)
            hi = np.where(obs, hi, np.inf)
            plans.append(_ColumnPlan("ordinal", lo=lo, hi=hi))
    if policy is None:
        policy = default_predictor_policy(expanded.schema)
    else:
        policy.validate_for(expanded.schema)
    check_policy_feasible(policy, expanded.observed.sum(axis=0))
    return _Prepared(transforms, cutpoints, policy, plans, expanded.schema.kinds)


@dataclass
class ChainState:
    """Mutable state of one chain: the latent matrix, the current parameter
    draw, the iteration counter, and the chain-local random stream."""

    latent: np.ndarray
    params: JointParams | None
    iteration: int
    rng: np.random.Generator
    plans: list[_ColumnPlan] = field(repr=False, default_factory=list)
    _solver: ConditionalSolver | None = field(default=None, repr=False)

    def set_params(self, params: JointParams) -> None:
        self.params = params
        self._solver = None

    @property
    def solver(self) -> ConditionalSolver:
        if self._solver is None:
            self._solver = ConditionalSolver(self.params)
        return self._solver


def _draw_binary(
    u: np.ndarray, mean: np.ndarray, sd: float, plan: _ColumnPlan, rng
) -> np.ndarray:
    """Standardized draws for a binary column: sign-constrained at observed
    cells, unconstrained at missing ones.

    The observed constraint always sits at zero, so one normal-CDF pass at
    the standardized zero bound covers both signs; rows whose bound has
    drifted past the tail threshold are rerouted through the general sampler.
    """
    alpha = -mean / sd
    s = ndtr(alpha)
    one = plan.is_one
    # observed 0: mass below the bound; observed 1: mass above; missing: all of it
    p = np.where(one, s + u * (1.0 - s), np.where(plan.is_missing, u, u * s))
    z = ndtri(np.clip(p, _PMIN, _PMAX))

    extreme = (np.abs(alpha) >= _TAIL) & ~plan.is_missing
    if extreme.any():
        rows = np.flatnonzero(extreme)
        lo = np.where(one[rows], alpha[rows], -np.inf)
        hi = np.where(one[rows], np.inf, alpha[rows])
        z[rows] = _trunc_std(u[rows], lo, hi, rng)
    return z


def _draw_column(
    latent: np.ndarray,
    j: int,
    mean: np.ndarray,
    sd: float,
    plan: _ColumnPlan,
    rng: np.random.Generator,
) -> None:
    """Redraw every non-fixed cell of column ``j`` around per-row means."""
    if plan.kind == "continuous":
        rows = plan.missing_rows
        if rows.size:
            u = rng.random(rows.size)
            p = np.clip(u, _PMIN, _PMAX)
            latent[rows, j] = mean[rows] + sd * ndtri(p)
    elif plan.kind == "binary":
        u = rng.random(latent.shape[0])
        lat = mean + sd * _draw_binary(u, mean, sd, plan, rng)
        # rounding through the affine map must not flip an observed sign
        np.maximum(lat, _TINY, out=lat, where=plan.is_one)
        np.minimum(lat, -_TINY, out=lat, where=plan.is_zero)
        latent[:, j] = lat
    else:
        u = rng.random(latent.shape[0])
        z = _trunc_std(u, (plan.lo - mean) / sd, (plan.hi - mean) / sd, rng)
        lat = mean + sd * z
        # level intervals are half-open (lo, hi]; pin stragglers back inside
        np.minimum(lat, plan.hi, out=lat)
        low_hit = lat <= plan.lo
        if low_hit.any():
            lat[low_hit] = np.nextafter(plan.lo[low_hit], np.inf)
        latent[:, j] = lat


def init_chain(
    expanded: ExpandedDataset,
    prepared: _Prepared,
    rng: np.random.Generator,
) -> ChainState:
    """Starting latent matrix: observed continuous cells take their fixed
    latent values, everything else is drawn around zero with unit variance
    under the usual per-type truncation rules."""
    n, q = expanded.values.shape
    latent = np.empty((n, q))
    zeros = np.zeros(n)
    for j, plan in enumerate(prepared.plans):
        if plan.kind == "continuous":
            latent[plan.observed_rows, j] = plan.fixed_latent
        _draw_column(latent, j, zeros, 1.0, plan, rng)
    return ChainState(latent, None, 0, rng, prepared.plans)


def gibbs_update_column(state: ChainState, j: int) -> ChainState:
    """One Gibbs step: redraw column ``j`` given all other columns.

    Columns before ``j`` already carry this iteration's values, columns after
    it still carry the previous ones.  Observed continuous cells are left
    untouched; every other cell is redrawn inside its truncation interval.
    """
    w, var = state.solver.weights(j)
    mu = state.solver.mu
    mean = (state.latent @ w) + (mu[j] - mu @ w)
    _draw_column(state.latent, j, mean, float(np.sqrt(var)), state.plans[j], state.rng)
    return state


def _back_transform(
    latent: np.ndarray, expanded: ExpandedDataset, prepared: _Prepared
) -> ExpandedDataset:
    """Map the final latent matrix to the observed scale and restore every
    originally observed cell verbatim."""
    n, q = latent.shape
    out = np.empty((n, q))
    for j, spec in enumerate(expanded.schema.columns):
        if spec.kind == "continuous":
            out[:, j] = prepared.transforms[j].from_latent(latent[:, j])
        elif spec.kind == "binary":
            out[:, j] = (latent[:, j] >= 0.0).astype(float)
        else:
            out[:, j] = prepared.cutpoints[j].level_of(latent[:, j])
    obs = expanded.observed
    out[obs] = expanded.values[obs]
    return ExpandedDataset(
        expanded.schema,
        out,
        np.ones_like(obs),
        list(expanded.groups),
        list(expanded.source_schema),
        expanded.source_column,
    )


def _run_prepared(
    expanded: ExpandedDataset,
    prepared: _Prepared,
    burn_in: int,
    rng: np.random.Generator,
    chain_index: int,
    trace: IO[str] | None = None,
) -> ExpandedDataset:
    state = init_chain(expanded, prepared, rng)
    q = expanded.q
    for t in range(1, burn_in + 1):
        try:
            models = draw_conditional_models(
                state.latent, prepared.policy, prepared.kinds, rng
            )
            state.set_params(assemble_joint(models))
        except GerbilError as exc:
            raise ChainError(str(exc), chain_index, t) from exc
        for j in range(q):
            try:
                gibbs_update_column(state, j)
            except GerbilError as exc:
                raise ChainError(
                    str(exc), chain_index, t, expanded.schema.names[j]
                ) from exc
        state.iteration = t
        if trace is not None:
            mu = " ".join(f"{v:.10g}" for v in state.params.mu)
            diag = " ".join(f"{v:.10g}" for v in np.diag(state.params.sigma))
            trace.write(f"{t} {mu} {diag}\n")
    return _back_transform(state.latent, expanded, prepared)


def run_chain(
    expanded: ExpandedDataset,
    config: ImputationConfig,
    chain_index: int,
    trace: IO[str] | None = None,
) -> ExpandedDataset:
    """Run one chain to its burn-in and return the completed expanded data."""
    prepared = _prepare(expanded, config.policy)
    rng = chain_rng(config.seed, chain_index)
    return _run_prepared(expanded, prepared, config.burn_in, rng, chain_index, trace)


def _run_one(dataset: MixedDataset, config: ImputationConfig, k: int, trace_path):
    expanded = expand(dataset)
    prepared = _prepare(expanded, config.policy)
    rng = chain_rng(config.seed, k)
    if trace_path is None:
        completed = _run_prepared(expanded, prepared, config.burn_in, rng, k)
    else:
        with open(trace_path, "w", encoding="utf-8") as trace:
            completed = _run_prepared(expanded, prepared, config.burn_in, rng, k, trace)
    return collapse(completed)


def _chain_worker(args):
    return _run_one(*args)


def impute(
    dataset: MixedDataset,
    config: ImputationConfig,
    jobs: int = 1,
    trace_paths: Sequence | None = None,
) -> list[MixedDataset]:
    """Multiply impute a dataset: ``config.m`` independent chains, each run
    to burn-in, back-transformed, and collapsed to the original schema.

    Chain ``k`` draws from a stream derived from ``(seed, k)``, so results do
    not depend on the order chains execute in (or on ``jobs``) and observed
    cells are carried through unchanged in every output.  ``trace_paths``
    may name one per-iteration trace file per chain.
    """
    if trace_paths is not None and len(trace_paths) != config.m:
        raise DataError("need one trace path per imputation")
    expanded = expand(dataset)
    prepared = _prepare(expanded, config.policy)  # validates data and policy
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        tasks = [
            (dataset, config, k, None if trace_paths is None else trace_paths[k])
            for k in range(config.m)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_chain_worker, tasks))
    out = []
    for k in range(config.m):
        rng = chain_rng(config.seed, k)
        if trace_paths is None:
            completed = _run_prepared(expanded, prepared, config.burn_in, rng, k)
        else:
            with open(trace_paths[k], "w", encoding="utf-8") as trace:
                completed = _run_prepared(
                    expanded, prepared, config.burn_in, rng, k, trace
                )
        out.append(collapse(completed))
    return out
