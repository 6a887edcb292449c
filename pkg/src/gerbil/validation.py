"""Input-validation helpers shared by the estimator facade and the CLI."""

from __future__ import annotations

import numpy as np

from .data_model import MixedDataset, VariableSpec
from .errors import DataError, SchemaError

__all__ = ["check_data_matrix", "coerce_schema", "dataset_from_matrix"]


def check_data_matrix(x) -> np.ndarray:
    """Coerce to a 2-d float matrix where NaN marks a missing cell."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DataError(f"expected a 2-d data matrix, got shape {x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise DataError("data matrix is empty")
    if np.isinf(x).any():
        raise DataError("data matrix contains infinite values")
    return x


def coerce_schema(schema, n_columns: int) -> list[VariableSpec]:
    """Accept VariableSpec lists or shorthand tuples/strings.

    Shorthand items may be a kind string ("continuous"), a ``(kind, levels)``
    pair, or a ``(name, kind, levels)`` triple; names default to x0, x1, ...
    """
    if schema is None:
        raise SchemaError("a schema is required: one spec per column")
    out = []
    for i, item in enumerate(schema):
        if isinstance(item, VariableSpec):
            out.append(item)
        elif isinstance(item, str):
            out.append(VariableSpec(f"x{i}", item))
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            out.append(VariableSpec(f"x{i}", item[0], item[1]))
        elif isinstance(item, (tuple, list)) and len(item) == 3:
            out.append(VariableSpec(item[0], item[1], item[2]))
        else:
            raise SchemaError(f"cannot interpret schema entry {item!r}")
    if len(out) != n_columns:
        raise SchemaError(
            f"schema has {len(out)} entries but the data have {n_columns} columns"
        )
    return out


def dataset_from_matrix(x: np.ndarray, schema: list[VariableSpec]) -> MixedDataset:
    """Wrap a NaN-marked matrix as a dataset under the given schema."""
    return MixedDataset(schema, x, ~np.isnan(x))
