"""Maps between the observed scale and the latent Gaussian scale.

Continuous columns travel through the empirical CDF: an observed value is
sent to the standard-normal quantile of its plotting position, and a latent
value comes back as the empirical quantile of its normal probability.
Ordinal columns are described by cutpoints that slice the latent axis into
one interval per level.  Both objects are estimated once from the observed
values and held fixed for the whole MCMC run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DataError

__all__ = [
    "ContinuousTransform",
    "CutpointSet",
    "fit_continuous",
    "fit_cutpoints",
]


@dataclass(frozen=True)
class ContinuousTransform:
    """Empirical-CDF bijection between one column and the latent scale.

    ``sorted_observed`` holds the distinct observed values; ties share the
    plotting position of their average rank, so positions are strictly
    increasing and stay inside (0, 1).
    """

    sorted_observed: np.ndarray
    plotting_positions: np.ndarray
    latent_knots: np.ndarray
    n_obs: int

    def to_latent(self, x) -> np.ndarray:
        """Latent value of observed data; defined only on the fitted support."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(self.sorted_observed, x)
        bad = (idx >= len(self.sorted_observed)) | (
            self.sorted_observed[np.minimum(idx, len(self.sorted_observed) - 1)] != x
        )
        if bad.any():
            raise DataError(
                f"value {x[bad][0]:g} was not among the observed values this "
                "transform was fitted on"
            )
        return self.latent_knots[idx]

    def from_latent(self, z) -> np.ndarray:
        """Observed-scale value of a latent draw.

        The normal probability of ``z`` is pushed through the empirical
        quantile function: linear interpolation between adjacent (position,
        value) pairs, clamped to the observed minimum and maximum outside the
        fitted range.  Latent knots map back to their own observed value
        exactly.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.isnan(z).any():
            raise DataError("from_latent received a NaN latent value")
        x = np.interp(ndtr(z), self.plotting_positions, self.sorted_observed)
        idx = np.searchsorted(self.latent_knots, z)
        idx = np.minimum(idx, len(self.latent_knots) - 1)
        exact = self.latent_knots[idx] == z
        x[exact] = self.sorted_observed[idx[exact]]
        return x


def fit_continuous(observed) -> ContinuousTransform:
    """Fit the empirical transform of one continuous column.

    Plotting positions are ``(rank - 0.5) / n`` so every probability is
    strictly inside (0, 1) and the normal quantile stays finite.
    """
    obs = np.asarray(observed, dtype=float)
    if obs.ndim != 1 or obs.size < 2:
        raise DataError("need at least two observed values")
    if not np.isfinite(obs).all():
        raise DataError("observed values must be finite")
    values, counts = np.unique(obs, return_counts=True)
    if len(values) < 2:
        raise DataError("column is constant; its marginal distribution is degenerate")
    # average rank of each distinct value, 1-based
    ranks = np.cumsum(counts) - (counts - 1) / 2.0
    positions = (ranks - 0.5) / obs.size
    return ContinuousTransform(values, positions, ndtri(positions), obs.size)


@dataclass(frozen=True)
class CutpointSet:
    """Thresholds slicing the latent axis into ordinal levels.

    ``tau`` has length ``levels + 1`` with -inf and +inf endpoints; level
    ``i`` corresponds to the half-open interval ``(tau[i-1], tau[i]]``.
    """

    tau: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.tau) - 1

    def interval(self, level) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper latent bounds of the given level(s)."""
        level = np.asarray(level, dtype=int)
        return self.tau[level - 1], self.tau[level]

    def level_of(self, z) -> np.ndarray:
        """Ordinal level of a latent value: ``i`` iff ``tau[i-1] < z <= tau[i]``."""
        return np.searchsorted(self.tau[1:-1], np.asarray(z, dtype=float), side="left") + 1


def fit_cutpoints(observed, levels: int) -> CutpointSet:
    """Cutpoints at the normal quantiles of the cumulative level proportions."""
    obs = np.asarray(observed, dtype=float).astype(int)
    counts = np.bincount(obs, minlength=levels + 1)[1:]
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0]) + 1
        raise DataError(
            f"ordinal level {empty} has no observed values; cutpoints would collapse"
        )
    cum = np.cumsum(counts[:-1]) / counts.sum()
    tau = np.concatenate(([-np.inf], ndtri(cum), [np.inf]))
    return CutpointSet(tau)
