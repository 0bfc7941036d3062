import numpy as np
import pytest

from replica_portfolio.core import risk_per_asset
from replica_portfolio.market import ReturnDistribution, generate, rescale
from replica_portfolio.variance_model import PRESETS, Identical, Uniform


def test_identical_zero_variance_rejected():
    with pytest.raises(ValueError):
        generate(3, 6, Identical(0.0), seed=1)


@pytest.mark.parametrize("spec", [PRESETS["1A"], Uniform(1, 4)])
def test_rademacher_entries_square_to_variance(spec):
    X = generate(40, 80, spec, ReturnDistribution.RADEMACHER, seed=2)
    np.testing.assert_allclose(X.entries**2, np.broadcast_to(X.variances[:, None], X.entries.shape), rtol=1e-14)


def test_gaussian_row_variances_concentrate():
    n, p = 200, 400
    X = generate(n, p, Identical(1.0), "gaussian", seed=3)
    row_var = X.entries.var(axis=1)
    within = np.abs(row_var - 1) <= 3 * np.sqrt(2 / p)
    assert within.mean() >= 0.95


def test_uniform_centered_support_and_variance():
    X = generate(50, 2000, Uniform(1, 2), "uniform", seed=4)
    bound = np.sqrt(3 * X.variances)[:, None]
    assert np.all(np.abs(X.entries) <= bound)
    ratio = (X.entries**2).mean(axis=1) / X.variances
    assert abs(ratio.mean() - 1) < 0.01


def test_generation_is_bitwise_reproducible():
    a = generate(30, 70, PRESETS["1B"], seed=12345)
    b = generate(30, 70, PRESETS["1B"], seed=12345)
    np.testing.assert_array_equal(a.entries, b.entries)
    np.testing.assert_array_equal(a.variances, b.variances)
    c = generate(30, 70, PRESETS["1B"], seed=12346)
    assert not np.array_equal(a.entries, c.entries)


def test_rows_keyed_by_asset_index():
    big = generate(60, 90, PRESETS["2B'"], seed=8)
    small = generate(20, 90, PRESETS["2B'"], seed=8)
    np.testing.assert_array_equal(big.entries[:20], small.entries)


def test_entries_zero_mean_overall():
    X = generate(100, 300, PRESETS["1A"], seed=5)
    z = X.entries / np.sqrt(X.variances)[:, None]
    assert abs(z.mean()) < 4 / np.sqrt(z.size)


def test_rescale():
    X = generate(10, 25, Identical(1.0), seed=6)
    assert rescale(X, 1.0) is X
    Y = rescale(X, 4.0)
    np.testing.assert_allclose(Y.entries, 2 * X.entries)
    np.testing.assert_allclose(Y.variances, 4 * X.variances)
    w = np.random.default_rng(0).standard_normal(10)
    assert risk_per_asset(w, Y) == pytest.approx(4 * risk_per_asset(w, X), rel=1e-13)
    with pytest.raises(ValueError):
        rescale(X, 0.0)


def test_distribution_parse():
    assert ReturnDistribution.parse("Rademacher") is ReturnDistribution.RADEMACHER
    with pytest.raises(ValueError):
        ReturnDistribution.parse("cauchy")
