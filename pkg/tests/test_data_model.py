import numpy as np
import pytest

from gerbil.data_model import (
    ExpandedSchema,
    MixedDataset,
    PredictorPolicy,
    VariableSpec,
    check_policy_feasible,
    default_predictor_policy,
    load_csv,
    read_policy_file,
    read_schema_file,
    save_csv,
    write_policy_file,
    write_schema_file,
)
from gerbil.errors import DataError, PolicyError, SchemaError


def test_variable_spec_validation():
    assert VariableSpec("b", "binary").levels == 2
    with pytest.raises(SchemaError):
        VariableSpec("x", "gaussian")
    with pytest.raises(SchemaError):
        VariableSpec("o", "ordinal")
    with pytest.raises(SchemaError):
        VariableSpec("c", "categorical", 1)
    with pytest.raises(SchemaError):
        VariableSpec("x", "continuous", 3)


def test_duplicate_names_rejected():
    with pytest.raises(SchemaError):
        MixedDataset(
            [VariableSpec("a", "continuous"), VariableSpec("a", "binary")],
            np.ones((2, 2)),
            np.ones((2, 2), dtype=bool),
        )


def test_cell_validation():
    schema = [VariableSpec("o", "ordinal", 3)]
    with pytest.raises(DataError, match="outside levels"):
        MixedDataset(schema, [[4.0]], [[True]])
    with pytest.raises(DataError, match="binary"):
        MixedDataset([VariableSpec("b", "binary")], [[2.0]], [[True]])
    with pytest.raises(DataError, match="no observed values"):
        MixedDataset(schema, [[np.nan]], [[False]])


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


SCHEMA = [
    VariableSpec("x", "continuous"),
    VariableSpec("c", "categorical", 4),
]


def test_load_csv_missing_token_and_values(tmp_path):
    path = write_csv(tmp_path, "x,c\n1.5,3\nNA,1\n2.25,\n")
    ds = load_csv(path, SCHEMA)
    assert ds.n == 3
    assert not ds.observed[1, 0]
    assert not ds.observed[2, 1]  # empty cell is missing too
    assert ds.values[0, 1] == 3.0


def test_load_csv_reports_bad_level(tmp_path):
    path = write_csv(tmp_path, "x,c\n1.0,5\n")
    with pytest.raises(DataError, match=r"column 'c', row 1"):
        load_csv(path, SCHEMA)


def test_load_csv_header_must_match(tmp_path):
    path = write_csv(tmp_path, "x,wrong\n1.0,1\n")
    with pytest.raises(DataError, match="header"):
        load_csv(path, SCHEMA)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    schema = [
        VariableSpec("x", "continuous"),
        VariableSpec("b", "binary"),
        VariableSpec("o", "ordinal", 5),
    ]
    n = 40
    values = np.column_stack(
        [
            rng.standard_normal(n) * 1e3,
            (rng.random(n) < 0.5).astype(float),
            rng.integers(1, 6, n).astype(float),
        ]
    )
    observed = rng.random((n, 3)) > 0.25
    observed[0] = True
    values[~observed] = np.nan
    ds = MixedDataset(schema, values, observed)
    path = tmp_path / "round.csv"
    save_csv(ds, path)
    back = load_csv(path, schema)
    assert np.array_equal(back.observed, ds.observed)
    assert np.array_equal(
        back.values[ds.observed], ds.values[ds.observed]
    )  # exact, including float noise


def test_schema_file_round_trip(tmp_path):
    schema = [
        VariableSpec("age", "continuous"),
        VariableSpec("employed", "binary"),
        VariableSpec("region", "categorical", 4),
        VariableSpec("rating", "ordinal", 5),
    ]
    path = tmp_path / "vars.schema"
    write_schema_file(schema, path)
    assert read_schema_file(path) == schema


def test_schema_file_errors(tmp_path):
    path = tmp_path / "bad.schema"
    path.write_text("x continuous extra junk\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_schema_file(path)


def flat_schema(kinds):
    cols = tuple(
        VariableSpec(f"v{i}", k) if k != "ordinal" else VariableSpec(f"v{i}", k, 3)
        for i, k in enumerate(kinds)
    )
    return ExpandedSchema(cols, (-1,) * len(cols))


def test_default_policy_single_column():
    policy = default_predictor_policy(flat_schema(["continuous"]))
    assert policy.kappa(0) == 1
    assert policy.predictors_of(0).size == 0


def test_default_policy_full_lower_triangle():
    policy = default_predictor_policy(flat_schema(["continuous"] * 3))
    assert policy.predictors_of(2).tolist() == [0, 1]
    assert not np.triu(policy.allow).any()


def test_default_policy_excludes_nested_siblings():
    schema = ExpandedSchema(
        (
            VariableSpec("c.1", "binary"),
            VariableSpec("c.2", "binary"),
            VariableSpec("x", "continuous"),
        ),
        (0, 0, -1),
    )
    policy = default_predictor_policy(schema)
    assert not policy.allow[1, 0]
    assert policy.allow[2, 0] and policy.allow[2, 1]


def test_policy_validation():
    with pytest.raises(PolicyError):
        PredictorPolicy(np.ones((2, 2), dtype=bool))
    schema = ExpandedSchema(
        (VariableSpec("c.1", "binary"), VariableSpec("c.2", "binary")),
        (0, 0),
    )
    allow = np.zeros((2, 2), dtype=bool)
    allow[1, 0] = True
    with pytest.raises(PolicyError, match="nested"):
        PredictorPolicy(allow).validate_for(schema)


def test_policy_feasibility_check():
    policy = default_predictor_policy(flat_schema(["continuous"] * 3))
    check_policy_feasible(policy, [10, 10, 10])
    with pytest.raises(PolicyError, match="shrink"):
        check_policy_feasible(policy, [10, 10, 3])


def test_policy_file_round_trip(tmp_path):
    schema = ExpandedSchema(
        (
            VariableSpec("c.1", "binary"),
            VariableSpec("c.2", "binary"),
            VariableSpec("x", "continuous"),
            VariableSpec("y", "continuous"),
        ),
        (0, 0, -1, -1),
    )
    policy = default_predictor_policy(schema)
    path = tmp_path / "policy.txt"
    write_policy_file(policy, schema, path)
    back = read_policy_file(path, schema)
    assert np.array_equal(back.allow, policy.allow)


def test_policy_file_rejects_forward_reference(tmp_path):
    schema = flat_schema(["continuous", "continuous"])
    path = tmp_path / "policy.txt"
    path.write_text("v0: v1\n", encoding="utf-8")
    with pytest.raises(PolicyError, match="precede"):
        read_policy_file(path, schema)
