import numpy as np
import pytest
from scipy.special import ndtri

from gerbil.errors import DataError
from gerbil.marginal import fit_continuous, fit_cutpoints


def test_plotting_positions_hand_example():
    t = fit_continuous([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(t.plotting_positions, [0.125, 0.375, 0.625, 0.875])


def test_constant_column_is_degenerate():
    with pytest.raises(DataError):
        fit_continuous([5.0, 5.0])


def test_median_maps_to_zero():
    t = fit_continuous([3.0, 1.0, 2.0, 9.0, 4.0])
    assert t.to_latent(3.0)[0] == pytest.approx(0.0, abs=1e-15)


def test_minimum_of_four_maps_to_first_octile():
    t = fit_continuous([1.0, 2.0, 3.0, 4.0])
    # standard-normal quantile of 0.125, from scipy as the oracle
    assert t.to_latent(1.0)[0] == pytest.approx(ndtri(0.125))
    assert t.to_latent(1.0)[0] == pytest.approx(-1.1503, abs=5e-5)


def test_to_latent_is_strictly_monotone():
    rng = np.random.default_rng(0)
    x = np.unique(rng.standard_normal(60))
    z = fit_continuous(x).to_latent(x)
    assert (np.diff(z) > 0).all()


def test_to_latent_rejects_unseen_value():
    t = fit_continuous([1.0, 2.0, 3.0])
    with pytest.raises(DataError):
        t.to_latent(2.5)


def test_from_latent_median_and_clamp():
    t = fit_continuous([1.0, 2.0, 3.0])
    assert t.from_latent(0.0)[0] == pytest.approx(2.0)
    assert t.from_latent(40.0)[0] == 3.0
    assert t.from_latent(-40.0)[0] == 1.0
    with pytest.raises(DataError):
        t.from_latent(np.nan)


def test_round_trip_exact_including_ties():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = rng.integers(2, 60)
        x = np.round(rng.standard_normal(n), 1)  # rounding forces ties
        if len(np.unique(x)) < 2:
            continue
        t = fit_continuous(x)
        back = t.from_latent(t.to_latent(x))
        assert np.array_equal(back, x)


def test_from_latent_monotone():
    rng = np.random.default_rng(2)
    t = fit_continuous(rng.standard_normal(40))
    z = np.linspace(-3, 3, 200)
    x = t.from_latent(z)
    assert (np.diff(x) >= 0).all()


def test_cutpoints_balanced_binaryish():
    tau = fit_cutpoints([1.0, 2.0] * 10, 2).tau
    assert tau[0] == -np.inf and tau[-1] == np.inf
    assert tau[1] == pytest.approx(0.0, abs=1e-15)


def test_cutpoints_hand_quartiles():
    data = [1.0] * 25 + [2.0] * 50 + [3.0] * 25
    tau = fit_cutpoints(data, 3).tau
    assert tau[1] == pytest.approx(-0.67449, abs=5e-6)
    assert tau[2] == pytest.approx(0.67449, abs=5e-6)


def test_cutpoints_require_every_level():
    with pytest.raises(DataError):
        fit_cutpoints([1.0, 3.0, 1.0, 3.0], 3)


def test_cutpoints_strictly_increasing_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        k = int(rng.integers(2, 7))
        data = np.concatenate([np.full(rng.integers(1, 30), lvl) for lvl in range(1, k + 1)])
        tau = fit_cutpoints(data, k).tau
        assert (np.diff(tau) > 0).all()


def test_level_of_half_open_intervals():
    cuts = fit_cutpoints([1.0] * 30 + [2.0] * 40 + [3.0] * 30, 3)
    t1, t2 = cuts.tau[1], cuts.tau[2]
    assert cuts.level_of(t1) == 1  # boundary belongs to the lower level
    assert cuts.level_of(np.nextafter(t1, np.inf)) == 2
    assert cuts.level_of(t2) == 2
    assert cuts.level_of(100.0) == 3


def test_interval_lookup_matches_levels():
    cuts = fit_cutpoints([1.0, 2.0, 3.0, 2.0, 1.0, 3.0], 3)
    lo, hi = cuts.interval(np.array([1, 2, 3]))
    assert lo[0] == -np.inf and hi[2] == np.inf
    assert np.allclose(lo[1:], cuts.tau[1:3])
    assert np.allclose(hi[:2], cuts.tau[1:3])
