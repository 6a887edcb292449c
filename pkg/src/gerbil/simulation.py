"""Synthetic evaluation harness: a six-variable mixed-type generator, the
three missingness mechanisms, the replication loop, and report emission.

Each replication draws a complete dataset, masks roughly a third of every
maskable column, multiply imputes the result, and pools per-imputation
estimates of means, covariances, and regression coefficients.  Coverage and
root-mean-squared error against known (or calibrated) parameter values are
accumulated across replications into a study report.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data_model import MixedDataset, VariableSpec
from .engine import ImputationConfig, impute
from .errors import DataError, GerbilError
from .metrics import ci_covers, fit_linear, fit_logistic, pool, rmse

__all__ = [
    "SIM_SCHEMA",
    "GeneratorParams",
    "MissingnessParams",
    "missingness_params",
    "generate_dataset",
    "impose_missingness",
    "analysis_estimates",
    "true_means",
    "SimConfig",
    "StudyReport",
    "run_study",
]

SIM_SCHEMA = [
    VariableSpec("X1", "categorical", 4),
    VariableSpec("X2", "continuous"),
    VariableSpec("X3", "continuous"),
    VariableSpec("X4", "binary"),
    VariableSpec("X5", "ordinal", 4),
    VariableSpec("X6", "binary"),
]

#: Columns that receive missingness; X2 stays fully observed.
MASKABLE = ("X1", "X3", "X4", "X5", "X6")

_SLOPES = {"X1": 0.5, "X3": 1.0, "X4": -1.0, "X5": 0.75, "X6": -0.5}

# sub-stream tags under the master seed
_STREAM_REP = 1
_STREAM_TRUTH = 2


def _equicorrelated(dim: int, rho: float) -> np.ndarray:
    return np.full((dim, dim), rho) + (1.0 - rho) * np.eye(dim)


@dataclass(frozen=True)
class GeneratorParams:
    """Constants of the synthetic data generator."""

    n: int = 2000
    category_probs: tuple = (0.25, 0.25, 0.25, 0.25)
    noise_cov: np.ndarray = field(default_factory=lambda: _equicorrelated(4, 0.5))
    category_shift: tuple = (1 / 3, 1 / 5, -1 / 3, -1 / 5)
    category_logit: tuple = (1 / 3, 1 / 5, -1 / 3, -1 / 5)
    noise_logit: tuple = (0.5, -0.5, -1 / 3, 1 / 3)
    ordinal_cuts: tuple = (-1.5, 0.0, 1.5)

    def __post_init__(self):
        if abs(sum(self.category_probs) - 1.0) > 1e-12:
            raise DataError("category probabilities must sum to 1")
        np.linalg.cholesky(self.noise_cov)  # must be positive definite


@dataclass(frozen=True)
class MissingnessParams:
    """Logistic response-indicator model, one coefficient set per column.

    The probability that a cell goes missing is
    ``1 / (1 + exp(intercept + x2_slope * X2 + self_slope * Xj))``; with the
    slopes at zero the log-2 intercept gives a rate of exactly 1/3.
    """

    mechanism: str
    intercept: float = float(np.log(2.0))
    x2_slope: dict = field(default_factory=dict)
    self_slope: dict = field(default_factory=dict)


def missingness_params(mechanism: str) -> MissingnessParams:
    mech = mechanism.lower()
    zero = {name: 0.0 for name in MASKABLE}
    if mech == "mcar":
        return MissingnessParams("mcar", x2_slope=dict(zero), self_slope=dict(zero))
    if mech == "mar":
        return MissingnessParams("mar", x2_slope=dict(_SLOPES), self_slope=dict(zero))
    if mech == "nmar":
        return MissingnessParams("nmar", x2_slope=dict(zero), self_slope=dict(_SLOPES))
    raise DataError(f"unknown mechanism {mechanism!r}; pick mcar, mar or nmar")


def generate_dataset(params: GeneratorParams, rng: np.random.Generator) -> MixedDataset:
    """Draw one complete dataset.

    X1 is 4-level multinomial.  A correlated Gaussian noise block, shifted by
    a per-category constant, drives X2 and X3 directly, X4 through a sign
    threshold, and X5 through fixed cuts; X6 is Bernoulli with a logit that
    mixes the category effect and the raw noise.  Random draws happen in a
    fixed order (category, noise block, X6), so a given stream always yields
    the same dataset.
    """
    n = params.n
    cum = np.cumsum(params.category_probs)
    code = np.searchsorted(cum, rng.random(n), side="right") + 1.0
    noise = rng.standard_normal((n, 4)) @ np.linalg.cholesky(params.noise_cov).T
    shift = np.asarray(params.category_shift)[code.astype(int) - 1]
    z = shift[:, None] + noise
    x4 = (z[:, 2] <= 0.0).astype(float)
    x5 = np.searchsorted(params.ordinal_cuts, z[:, 3], side="left") + 1.0
    logit = np.asarray(params.category_logit)[code.astype(int) - 1]
    logit = logit + noise @ np.asarray(params.noise_logit)
    x6 = (rng.random(n) < expit(logit)).astype(float)
    values = np.column_stack([code, z[:, 0], z[:, 1], x4, x5, x6])
    return MixedDataset(list(SIM_SCHEMA), values, np.ones((n, 6), dtype=bool))


def impose_missingness(
    dataset: MixedDataset,
    truth: MixedDataset,
    params: MissingnessParams,
    rng: np.random.Generator,
) -> MixedDataset:
    """Mask each maskable column independently with its logistic probability.

    Probabilities are computed from the truth copy, so a mechanism may depend
    on the very values being removed.  One uniform vector is consumed per
    maskable column, in schema order.
    """
    values = dataset.values.copy()
    observed = dataset.observed.copy()
    x2 = truth.values[:, truth.column_index("X2")]
    for name in MASKABLE:
        j = truth.column_index(name)
        eta = (
            params.intercept
            + params.x2_slope[name] * x2
            + params.self_slope[name] * truth.values[:, j]
        )
        gone = rng.random(dataset.n) < expit(-eta)
        observed[:, j] &= ~gone
        values[gone, j] = np.nan
    return MixedDataset(list(dataset.schema), values, observed)


# ---------------------------------------------------------------------------
# tracked parameters
# ---------------------------------------------------------------------------

_IND = ["X1=1", "X1=2", "X1=3", "X1=4"]
_NINE = _IND + ["X2", "X3", "X4", "X5", "X6"]

MEAN_PARAMS = [f"mean[{v}]" for v in _NINE if v != "X2"]
VAR_PARAMS = [f"var[{v}]" for v in _NINE if v != "X2"]
COV_PARAMS = [f"cov[{a},{b}]" for a, b in itertools.combinations(_NINE, 2)]

#: Fully specified analysis models: every non-categorical outcome on all
#: other variables (reference indicator X1=1 dropped).
MODEL_SPECS = [
    ("X2", "linear"),
    ("X3", "linear"),
    ("X4", "logistic"),
    ("X5", "linear"),
    ("X6", "logistic"),
]


def _model_predictors(outcome: str) -> list[str]:
    rest = [v for v in ("X2", "X3", "X4", "X5", "X6") if v != outcome]
    return ["intercept", "X1=2", "X1=3", "X1=4"] + rest


COEF_PARAMS = [
    f"coef[{out}~{pred}]"
    for out, _ in MODEL_SPECS
    for pred in _model_predictors(out)
]
SE2_PARAMS = [name.replace("coef[", "se2[", 1) for name in COEF_PARAMS]

#: Parameters that carry a Rubin-pooled interval (means and coefficients).
POOLED_PARAMS = MEAN_PARAMS + COEF_PARAMS
ALL_PARAMS = MEAN_PARAMS + VAR_PARAMS + COV_PARAMS + COEF_PARAMS + SE2_PARAMS


def _nine_matrix(values: np.ndarray) -> np.ndarray:
    """Indicator-expanded data matrix in the order of ``_NINE``."""
    code = values[:, 0].astype(int)
    ind = (code[:, None] == np.arange(1, 5)[None, :]).astype(float)
    return np.column_stack([ind, values[:, 1:]])


def analysis_estimates(values: np.ndarray) -> dict:
    """All tracked estimates from one completed dataset.

    Returns ``name -> (estimate, squared standard error)``; the squared
    standard error is None for parameters that are tracked by rMSE only
    (variances, covariances, and the squared standard errors themselves).
    """
    m = _nine_matrix(values)
    n = m.shape[0]
    out: dict[str, tuple[float, float | None]] = {}
    for idx, name in enumerate(_NINE):
        if name == "X2":
            continue
        col = m[:, idx]
        out[f"mean[{name}]"] = (float(col.mean()), float(col.var(ddof=1) / n))
    cov = np.cov(m.T, ddof=1)
    for idx, name in enumerate(_NINE):
        if name != "X2":
            out[f"var[{name}]"] = (float(cov[idx, idx]), None)
    for (ia, a), (ib, b) in itertools.combinations(enumerate(_NINE), 2):
        out[f"cov[{a},{b}]"] = (float(cov[ia, ib]), None)

    columns = {name: m[:, idx] for idx, name in enumerate(_NINE)}
    for outcome, kind in MODEL_SPECS:
        preds = _model_predictors(outcome)
        design = np.column_stack(
            [np.ones(n)] + [columns[p] for p in preds if p != "intercept"]
        )
        y = columns[outcome]
        if kind == "linear":
            coef, se2 = fit_linear(y, design)
        else:
            coef, se2 = fit_logistic(y, design)
        for p, c, s in zip(preds, coef, se2):
            out[f"coef[{outcome}~{p}]"] = (float(c), float(s))
            out[f"se2[{outcome}~{p}]"] = (float(s), None)
    return out


def true_means() -> dict:
    """Exact means implied by the generator constants.

    Equal category masses make each indicator mean 1/4; the shift constants
    come in opposite-sign pairs, so X3 has mean zero, the sign threshold and
    the logistic response are balanced at 1/2, and the symmetric cuts center
    the ordinal scale at 2.5.
    """
    truths = {f"mean[{v}]": 0.25 for v in _IND}
    truths["mean[X3]"] = 0.0
    truths["mean[X4]"] = 0.5
    truths["mean[X5]"] = 2.5
    truths["mean[X6]"] = 0.5
    return truths


def _calibration_truths(config: "SimConfig") -> dict:
    """Pseudo-true values for everything the generator does not pin down
    analytically, from one large complete sample.

    Regression coefficients and (co)variances take their large-sample
    estimates; a squared standard error scales inversely with the sample
    size, so its value at the study size is the large-sample value times
    ``truth_n / n``.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence([int(config.seed), _STREAM_TRUTH])
    )
    big = generate_dataset(GeneratorParams(n=config.truth_n), rng)
    estimates = analysis_estimates(big.values)
    truths = {}
    for name in VAR_PARAMS + COV_PARAMS + COEF_PARAMS:
        truths[name] = estimates[name][0]
    scale = config.truth_n / config.n
    for name in SE2_PARAMS:
        truths[name] = estimates[name][0] * scale
    truths.update(true_means())
    return truths


# ---------------------------------------------------------------------------
# study orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulation study."""

    mechanism: str
    replications: int = 200
    n: int = 2000
    m: int = 10
    burn_in: int = 60
    seed: int = 0
    truth_n: int = 1_000_000
    alpha: float = 0.05
    jobs: int = 1

    def __post_init__(self):
        missingness_params(self.mechanism)  # validates the name
        if self.replications < 1 or self.n < 10 or self.m < 2:
            raise DataError("need replications >= 1, n >= 10 and m >= 2")


def _replicate(config: SimConfig, truths: dict, r: int) -> dict:
    """One replication: generate, mask, impute, pool."""
    seed = int(config.seed)
    gen_rng = np.random.default_rng(np.random.SeedSequence([seed, _STREAM_REP, r, 0]))
    mask_rng = np.random.default_rng(np.random.SeedSequence([seed, _STREAM_REP, r, 1]))
    complete = generate_dataset(GeneratorParams(n=config.n), gen_rng)
    masked = impose_missingness(
        complete, complete, missingness_params(config.mechanism), mask_rng
    )
    imputed = impute(
        masked,
        ImputationConfig(
            burn_in=config.burn_in, m=config.m, seed=(seed, _STREAM_REP, r, 2)
        ),
    )
    per_imp = [analysis_estimates(d.values) for d in imputed]
    result = {}
    for name in ALL_PARAMS:
        points = [e[name][0] for e in per_imp]
        if name in _POOLED_SET:
            p = pool(points, [e[name][1] for e in per_imp])
            result[name] = (p.qbar, ci_covers(p, truths[name], config.alpha))
        else:
            result[name] = (float(np.mean(points)), None)
    return result


_POOLED_SET = frozenset(POOLED_PARAMS)


def _replicate_worker(args):
    config, truths, r = args
    try:
        return r, _replicate(config, truths, r), None
    except GerbilError as exc:
        return r, None, str(exc)


@dataclass
class StudyReport:
    """Per-parameter coverage and rMSE tables plus the run's configuration."""

    config: SimConfig
    truths: dict
    completed: int
    failures: list
    coverage: dict
    rmse: dict

    def parameter_families(self) -> dict:
        return {
            "means": MEAN_PARAMS,
            "variances": VAR_PARAMS,
            "covariances": COV_PARAMS,
            "coefficients": COEF_PARAMS,
            "squared_se": SE2_PARAMS,
        }

    def summary_text(self) -> str:
        c = self.config
        lines = [
            "simulation study summary",
            f"mechanism={c.mechanism} replications={c.replications} n={c.n} "
            f"m={c.m} burn_in={c.burn_in} seed={c.seed} alpha={c.alpha}",
            f"completed={self.completed} failures={len(self.failures)}",
        ]
        for r, msg in self.failures:
            lines.append(f"  replication {r} failed: {msg}")
        for family, names in self.parameter_families().items():
            lines.append("")
            lines.append(family)
            header = "parameter truth rmse"
            if names[0] in self.coverage:
                header += " coverage"
            lines.append(header)
            for name in names:
                row = f"{name} {self.truths[name]!r} {self.rmse[name]!r}"
                if name in self.coverage:
                    row += f" {self.coverage[name]!r}"
                lines.append(row)
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> list[Path]:
        """Emit one CSV per parameter family plus a plain-text summary."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for family, names in self.parameter_families().items():
            path = out / f"{family}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                pooled = names[0] in self.coverage
                fh.write("parameter,truth,rmse" + (",coverage\n" if pooled else "\n"))
                for name in names:
                    row = f"{name},{self.truths[name]!r},{self.rmse[name]!r}"
                    if pooled:
                        row += f",{self.coverage[name]!r}"
                    fh.write(row + "\n")
            written.append(path)
        summary = out / "summary.txt"
        summary.write_text(self.summary_text(), encoding="utf-8")
        written.append(summary)
        return written


def run_study(config: SimConfig) -> StudyReport:
    """Run the full replication loop and aggregate coverage and rMSE.

    Replications use streams indexed by replication number, so reports are
    reproducible for a given configuration no matter how the work is
    scheduled; failed replications are recorded and excluded from the
    aggregates rather than silently dropped.
    """
    truths = _calibration_truths(config)
    jobs = max(1, int(config.jobs))
    results: list[dict | None] = [None] * config.replications
    failures: list[tuple[int, str]] = []
    if jobs == 1:
        for r in range(config.replications):
            _, res, err = _replicate_worker((config, truths, r))
            if err is None:
                results[r] = res
            else:
                failures.append((r, err))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool_:
            args = [(config, truths, r) for r in range(config.replications)]
            for r, res, err in pool_.map(_replicate_worker, args, chunksize=4):
                if err is None:
                    results[r] = res
                else:
                    failures.append((r, err))
    done = [res for res in results if res is not None]
    if not done:
        raise DataError("every replication failed; see the failure list")
    coverage = {}
    rmse_out = {}
    for name in ALL_PARAMS:
        points = np.array([res[name][0] for res in done])
        rmse_out[name] = rmse(points, truths[name])
        if name in _POOLED_SET:
            covered = np.array([res[name][1] for res in done], dtype=float)
            coverage[name] = float(covered.mean())
    failures.sort()
    return StudyReport(config, truths, len(done), failures, coverage, rmse_out)
