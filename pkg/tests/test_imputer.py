import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gerbil.imputer import GerbilImputer


def example_data(seed=0, n=120):
    rng = np.random.default_rng(seed)
    x = np.column_stack(
        [
            rng.standard_normal(n),
            (rng.random(n) < 0.5).astype(float),
            rng.integers(1, 4, n).astype(float),
        ]
    )
    x[:3, 2] = [1, 2, 3]
    mask = rng.random((n, 3)) < 0.25
    mask[:3] = False
    x[mask] = np.nan
    return x


SCHEMA = ["continuous", "binary", ("categorical", 3)]


def make_imputer(**kw):
    base = dict(schema=SCHEMA, n_imputations=3, n_iterations=5, random_state=1)
    base.update(kw)
    return GerbilImputer(**base)


def test_fit_transform_completes_the_data():
    x = example_data()
    out = make_imputer().fit_transform(x)
    assert out.shape == x.shape
    assert not np.isnan(out).any()
    observed = ~np.isnan(x)
    assert np.array_equal(out[observed], x[observed])


def test_all_imputations_are_available():
    x = example_data()
    imp = make_imputer().fit(x)
    assert len(imp.imputations_) == 3
    assert all(not np.isnan(v).any() for v in imp.imputations_)
    assert not np.array_equal(imp.imputations_[0], imp.imputations_[1])


def test_deterministic_given_random_state():
    x = example_data()
    a = make_imputer().fit_transform(x)
    b = make_imputer().fit_transform(x)
    assert np.array_equal(a, b)
    c = make_imputer(random_state=2).fit_transform(x)
    assert not np.array_equal(a, c)


def test_sklearn_protocol():
    imp = make_imputer()
    params = imp.get_params()
    assert params["n_imputations"] == 3
    cloned = clone(imp)
    assert cloned.get_params() == params
    imp.set_params(n_imputations=2)
    assert imp.get_params()["n_imputations"] == 2


def test_transform_requires_fit_and_same_data_shape():
    x = example_data()
    imp = make_imputer()
    with pytest.raises(NotFittedError):
        imp.transform(x)
    imp.fit(x)
    with pytest.raises(ValueError):
        imp.transform(x[:10])


def test_schema_is_required_and_checked():
    x = example_data()
    with pytest.raises(Exception):
        GerbilImputer(schema=None).fit(x)
    with pytest.raises(Exception):
        GerbilImputer(schema=["continuous"]).fit(x)  # wrong column count
