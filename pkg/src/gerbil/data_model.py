"""Mixed-type dataset representation, schema and CSV round-trips, and
predictor policies.

A dataset is a dense ``(n, p)`` float matrix plus an observed-cell mask.
Binary cells hold 0/1, ordinal and categorical cells hold level codes
``1..k``, and missing cells hold NaN with ``observed`` False.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, PolicyError, SchemaError

KINDS = ("continuous", "binary", "ordinal", "categorical")


@dataclass(frozen=True)
class VariableSpec:
    """Name, kind and (for discrete kinds) the number of levels of one variable."""

    name: str
    kind: str
    levels: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"variable {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "binary":
            if self.levels not in (None, 2):
                raise SchemaError(f"variable {self.name!r}: binary implies levels=2")
            object.__setattr__(self, "levels", 2)
        elif self.kind in ("ordinal", "categorical"):
            if self.levels is None or self.levels < 2:
                raise SchemaError(
                    f"variable {self.name!r}: {self.kind} needs levels >= 2"
                )
        elif self.levels is not None:
            raise SchemaError(f"variable {self.name!r}: continuous takes no levels")


def _check_schema(schema: list[VariableSpec]) -> None:
    names = [s.name for s in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate variable names: {dupes}")
    if not schema:
        raise SchemaError("schema is empty")


@dataclass
class MixedDataset:
    """Observed mixed-type data with a missingness mask.

    Immutable by convention after construction; the engine never writes into
    a dataset it was given, so instances are safe to share across chains.
    """

    schema: list[VariableSpec]
    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        _check_schema(self.schema)
        self.values = np.asarray(self.values, dtype=float)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.values.ndim != 2 or self.values.shape != self.observed.shape:
            raise DataError("values and observed must be matching 2-d arrays")
        if self.values.shape[1] != len(self.schema):
            raise DataError(
                f"data have {self.values.shape[1]} columns, schema has {len(self.schema)}"
            )
        self._validate_cells()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.schema]

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown column {name!r}") from None

    def copy(self) -> "MixedDataset":
        return MixedDataset(list(self.schema), self.values.copy(), self.observed.copy())

    def _validate_cells(self) -> None:
        for j, spec in enumerate(self.schema):
            col = self.values[:, j]
            obs = self.observed[:, j]
            if np.isnan(col[obs]).any():
                bad = int(np.flatnonzero(obs & np.isnan(col))[0])
                raise DataError(f"column {spec.name!r}, row {bad}: observed cell is NaN")
            if not obs.any():
                raise DataError(
                    f"column {spec.name!r} has no observed values and cannot be imputed"
                )
            vals = col[obs]
            if spec.kind == "binary":
                if not np.isin(vals, (0.0, 1.0)).all():
                    raise DataError(f"column {spec.name!r}: binary cells must be 0 or 1")
            elif spec.kind in ("ordinal", "categorical"):
                ok = (vals == np.round(vals)) & (vals >= 1) & (vals <= spec.levels)
                if not ok.all():
                    bad = int(np.flatnonzero(obs)[np.flatnonzero(~ok)[0]])
                    raise DataError(
                        f"column {spec.name!r}, row {bad}: value {col[bad]:g} "
                        f"outside levels 1..{spec.levels}"
                    )


@dataclass(frozen=True)
class ExpandedSchema:
    """Schema of the reformatted data: continuous/binary/ordinal columns only.

    ``group_id[j]`` is -1 for columns copied from the source data and the
    source column index for nested indicators created from a categorical
    variable; indicators of one categorical share a group id.
    """

    columns: tuple[VariableSpec, ...]
    group_id: tuple[int, ...]

    def __post_init__(self):
        if any(c.kind == "categorical" for c in self.columns):
            raise SchemaError("expanded schema may not contain categorical columns")
        if len(self.columns) != len(self.group_id):
            raise SchemaError("group_id length must match the column count")

    @property
    def q(self) -> int:
        return len(self.columns)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(c.kind for c in self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]


@dataclass
class PredictorPolicy:
    """Which expanded columns may act as predictors for which targets.

    ``allow[j, i]`` permits column ``i`` as a predictor of column ``j``; the
    support is strictly lower triangular (a column can only depend on columns
    that precede it) and nested indicators of one categorical variable never
    predict each other.  The intercept is always included and is not part of
    the mask.
    """

    allow: np.ndarray

    def __post_init__(self):
        self.allow = np.asarray(self.allow, dtype=bool)
        q = self.allow.shape[0]
        if self.allow.ndim != 2 or self.allow.shape != (q, q):
            raise PolicyError("allow must be a square boolean matrix")
        if np.triu(self.allow).any():
            raise PolicyError("allow must be strictly lower triangular")

    @property
    def q(self) -> int:
        return self.allow.shape[0]

    def predictors_of(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.allow[j])

    def kappa(self, j: int) -> int:
        """Predictor count of column ``j``, intercept included."""
        return int(self.allow[j].sum()) + 1

    def validate_for(self, schema: ExpandedSchema) -> "PredictorPolicy":
        if self.q != schema.q:
            raise PolicyError(f"policy is {self.q}x{self.q}, schema has q={schema.q}")
        gid = np.asarray(schema.group_id)
        for j in range(self.q):
            if gid[j] < 0:
                continue
            siblings = (gid == gid[j]) & (np.arange(self.q) != j)
            if self.allow[j, siblings].any():
                raise PolicyError(
                    f"column {schema.names[j]!r} may not depend on nested "
                    "indicators of the same categorical variable"
                )
        return self


def default_predictor_policy(schema: ExpandedSchema) -> PredictorPolicy:
    """Full lower-triangular policy minus nested-sibling exclusions.

    Every column may depend on all columns before it, except that nested
    indicators created from one categorical variable are mutually excluded.
    """
    q = schema.q
    allow = np.tril(np.ones((q, q), dtype=bool), k=-1)
    gid = np.asarray(schema.group_id)
    for j in range(q):
        if gid[j] >= 0:
            allow[j, gid == gid[j]] = False
    return PredictorPolicy(allow).validate_for(schema)


def check_policy_feasible(policy: PredictorPolicy, observed_counts) -> None:
    """Fail when some column has at least as many predictors as observed cases."""
    counts = np.asarray(observed_counts)
    for j in range(policy.q):
        if policy.kappa(j) >= counts[j]:
            raise PolicyError(
                f"column {j}: {policy.kappa(j)} regression parameters but only "
                f"{int(counts[j])} observed cases; shrink the predictor policy"
            )


# ---------------------------------------------------------------------------
# schema files: one variable per line, "name kind [levels]", '#' comments
# ---------------------------------------------------------------------------

def read_schema_file(path) -> list[VariableSpec]:
    schema = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise SchemaError(f"{path}:{lineno}: expected 'name kind [levels]'")
            name, kind = parts[0], parts[1]
            levels = None
            if len(parts) == 3:
                try:
                    levels = int(parts[2])
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}: levels must be an integer") from None
            schema.append(VariableSpec(name, kind, levels))
    _check_schema(schema)
    return schema


def write_schema_file(schema: list[VariableSpec], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for spec in schema:
            if spec.kind in ("ordinal", "categorical"):
                fh.write(f"{spec.name} {spec.kind} {spec.levels}\n")
            else:
                fh.write(f"{spec.name} {spec.kind}\n")


# ---------------------------------------------------------------------------
# policy files: one line per target, "target: predictor predictor ...";
# targets left out get an intercept-only model
# ---------------------------------------------------------------------------

def read_policy_file(path, schema: ExpandedSchema) -> PredictorPolicy:
    index = {name: i for i, name in enumerate(schema.names)}
    allow = np.zeros((schema.q, schema.q), dtype=bool)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise PolicyError(f"{path}:{lineno}: expected 'target: predictors...'")
            target_name, rest = line.split(":", 1)
            names = [target_name.strip()] + rest.split()
            for name in names:
                if name not in index:
                    raise PolicyError(
                        f"{path}:{lineno}: unknown expanded column {name!r}; "
                        f"known columns are {schema.names}"
                    )
            j = index[names[0]]
            for name in names[1:]:
                i = index[name]
                if i >= j:
                    raise PolicyError(
                        f"{path}:{lineno}: {name!r} does not precede the target "
                        "and cannot predict it"
                    )
                allow[j, i] = True
    return PredictorPolicy(allow).validate_for(schema)


def write_policy_file(policy: PredictorPolicy, schema: ExpandedSchema, path) -> None:
    names = schema.names
    with open(path, "w", encoding="utf-8") as fh:
        for j in range(policy.q):
            preds = " ".join(names[i] for i in policy.predictors_of(j))
            fh.write(f"{names[j]}: {preds}\n".replace(": \n", ":\n"))


# ---------------------------------------------------------------------------
# CSV ingestion / emission
# ---------------------------------------------------------------------------

def _parse_cell(text: str, spec: VariableSpec, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"column {spec.name!r}, row {row}: cannot parse {text!r}"
        ) from None
    if spec.kind == "continuous":
        if not np.isfinite(value):
            raise DataError(f"column {spec.name!r}, row {row}: non-finite value {text!r}")
        return value
    if spec.kind == "binary":
        if value not in (0.0, 1.0):
            raise DataError(f"column {spec.name!r}, row {row}: binary cell {text!r}")
        return value
    if value != int(value) or not (1 <= value <= spec.levels):
        raise DataError(
            f"column {spec.name!r}, row {row}: level {text!r} outside 1..{spec.levels}"
        )
    return value


def load_csv(path, schema: list[VariableSpec], missing_token: str = "NA") -> MixedDataset:
    """Read an RFC-4180 CSV whose header matches the schema names.

    ``missing_token`` cells (and empty cells) become missing values.  Every
    observed discrete cell is validated against its declared levels; errors
    report the offending row and column.
    """
    _check_schema(schema)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = [s.name for s in schema]
        if header != expected:
            raise DataError(f"{path}: header {header} does not match schema {expected}")
        rows = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(schema):
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, expected {len(schema)}")
            rows.append(row)
    n, p = len(rows), len(schema)
    values = np.full((n, p), np.nan)
    observed = np.zeros((n, p), dtype=bool)
    for i, row in enumerate(rows):
        for j, text in enumerate(row):
            if text == missing_token or text == "":
                continue
            values[i, j] = _parse_cell(text, schema[j], i + 1)
            observed[i, j] = True
    return MixedDataset(schema, values, observed)


def save_csv(dataset: MixedDataset, path, missing_token: str = "NA") -> None:
    """Write a dataset so that ``load_csv`` reproduces it cell for cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names)
        discrete = [s.kind != "continuous" for s in dataset.schema]
        for i in range(dataset.n):
            row = []
            for j in range(dataset.p):
                if not dataset.observed[i, j]:
                    row.append(missing_token)
                elif discrete[j]:
                    row.append(str(int(dataset.values[i, j])))
                else:
                    row.append(repr(float(dataset.values[i, j])))
            writer.writerow(row)
