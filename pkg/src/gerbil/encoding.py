"""Expansion of unordered categorical variables into nested binary
indicators, and the inverse mapping applied after imputation.

A categorical column with ``k`` levels becomes ``k - 1`` sequential binary
columns.  Once a row is known to fall in an earlier category, the later
indicators carry no information and are made missing on purpose; ordering
the categories from least to most prevalent keeps the number of such
imposed missing cells as small as possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import ExpandedSchema, MixedDataset, VariableSpec
from .errors import DataError

__all__ = ["NestedGroup", "ExpandedDataset", "order_categories", "expand", "collapse"]


@dataclass(frozen=True)
class NestedGroup:
    """Bookkeeping for one expanded categorical column.

    ``order`` lists all category codes from least to most prevalent.  For
    ``r < size`` the indicator at ``start + r`` asks "does this row fall in
    category ``order[r]``?"; the most prevalent category ``order[size]`` has
    no indicator of its own and shows up as all zeros.
    """

    source: int
    start: int
    size: int
    order: tuple[int, ...]


@dataclass
class ExpandedDataset:
    """Reformatted data containing only continuous, binary and ordinal columns."""

    schema: ExpandedSchema
    values: np.ndarray
    observed: np.ndarray
    groups: list[NestedGroup]
    source_schema: list[VariableSpec]
    source_column: np.ndarray  # expanded index -> original column index

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "ExpandedDataset":
        return ExpandedDataset(
            self.schema,
            self.values.copy(),
            self.observed.copy(),
            list(self.groups),
            list(self.source_schema),
            self.source_column,
        )


def order_categories(values: np.ndarray, observed: np.ndarray, levels: int) -> np.ndarray:
    """Return category codes ``1..levels`` sorted by ascending observed count.

    Ties are broken by the original code so runs are reproducible.  A category
    that never occurs is an error: its indicator column could not be fit.
    """
    vals = values[observed].astype(int)
    counts = np.bincount(vals, minlength=levels + 1)[1:]
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0]) + 1
        raise DataError(f"category {empty} has no observed occurrences")
    return np.lexsort((np.arange(1, levels + 1), counts)) + 1


def expand(dataset: MixedDataset) -> ExpandedDataset:
    """Reformat a mixed dataset so that no categorical columns remain.

    Non-categorical columns are copied verbatim.  A categorical column with
    values reordered by prevalence becomes nested indicators: position ``r``
    is 1 when the row falls in the ``r``-th category, 0 when it falls in a
    later one, and missing when it falls in an earlier one (or the source
    cell itself is missing).
    """
    cols: list[np.ndarray] = []
    obs: list[np.ndarray] = []
    specs: list[VariableSpec] = []
    group_id: list[int] = []
    source_col: list[int] = []
    groups: list[NestedGroup] = []

    for j, spec in enumerate(dataset.schema):
        if spec.kind != "categorical":
            cols.append(dataset.values[:, j])
            obs.append(dataset.observed[:, j])
            specs.append(spec)
            group_id.append(-1)
            source_col.append(j)
            continue

        order = order_categories(dataset.values[:, j], dataset.observed[:, j], spec.levels)
        # rank[c-1] = 1-based nesting position of original code c
        rank = np.empty(spec.levels, dtype=int)
        rank[order - 1] = np.arange(1, spec.levels + 1)
        code = dataset.values[:, j]
        src_obs = dataset.observed[:, j]
        pos = np.where(src_obs, rank[np.where(src_obs, code, 1).astype(int) - 1], 0)

        start = len(cols)
        for r in range(1, spec.levels):
            observed_here = src_obs & (pos >= r)
            col = np.where(observed_here, (pos == r).astype(float), np.nan)
            cols.append(col)
            obs.append(observed_here)
            specs.append(VariableSpec(f"{spec.name}.{r}", "binary"))
            group_id.append(j)
            source_col.append(j)
        groups.append(
            NestedGroup(source=j, start=start, size=spec.levels - 1, order=tuple(order))
        )

    schema = ExpandedSchema(tuple(specs), tuple(group_id))
    return ExpandedDataset(
        schema,
        np.column_stack(cols),
        np.column_stack(obs),
        groups,
        list(dataset.schema),
        np.asarray(source_col),
    )


def collapse(imputed: ExpandedDataset) -> MixedDataset:
    """Map a completed expanded dataset back to the original schema.

    Within a nested group the first indicator equal to 1 decides the
    category; if all indicators are 0 the row falls in the last category.
    Values after the first 1 are ignored, so cells whose missingness was
    imposed by the nesting itself never block the decoding.  Any other
    missing cell (a copied column, or an indicator that would be needed to
    decide) is an error: those require imputation first.
    """
    n = imputed.n
    p = len(imputed.source_schema)
    values = np.empty((n, p))
    by_group = {g.source: g for g in imputed.groups}
    copied = {
        src: jx
        for jx, src in enumerate(imputed.source_column)
        if imputed.schema.group_id[jx] == -1
    }
    for j, spec in enumerate(imputed.source_schema):
        if spec.kind != "categorical":
            jx = copied[j]
            if not imputed.observed[:, jx].all():
                row = int(np.flatnonzero(~imputed.observed[:, jx])[0])
                raise DataError(
                    f"cannot collapse: cell (row {row}, column "
                    f"{imputed.schema.names[jx]!r}) is missing"
                )
            values[:, j] = imputed.values[:, jx]
            continue
        g = by_group[j]
        codes = np.asarray(g.order, dtype=float)
        obs = imputed.observed[:, g.start : g.start + g.size]
        fired = obs & (imputed.values[:, g.start : g.start + g.size] == 1.0)
        pos = np.where(fired.any(axis=1), fired.argmax(axis=1), g.size)
        undecided = (np.arange(g.size) < pos[:, None]) & ~obs
        if undecided.any():
            row, offset = np.argwhere(undecided)[0]
            raise DataError(
                f"cannot collapse: cell (row {row}, column "
                f"{imputed.schema.names[g.start + offset]!r}) is missing and "
                "no earlier indicator decided the category"
            )
        values[:, j] = codes[pos]
    observed = np.ones((n, p), dtype=bool)
    return MixedDataset(list(imputed.source_schema), values, observed)
