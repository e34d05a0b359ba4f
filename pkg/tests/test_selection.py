"""Permutation-importance ranking and greedy predictor selection."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from raincal.forests import ForestHyper, grow_forest
from raincal.selection import (
    SelectionResult,
    permutation_importance,
    predictor_frequency,
    select_predictors,
)


def _signal_matrix(seed=0, n=400):
    """Columns: strong signal, weak signal, copy of the strong one, noise."""
    rng = np.random.default_rng(seed)
    strong = rng.uniform(0.0, 4.0, n)
    weak = rng.uniform(0.0, 4.0, n)
    copy = strong + rng.normal(0.0, 0.05, n)  # corr > 0.99 with strong
    noise = rng.uniform(0.0, 4.0, n)
    y = 2.0 * strong + 0.4 * weak + rng.normal(0.0, 0.4, n)
    X = np.column_stack([strong, weak, copy, noise])
    return X, y, ["strong", "weak", "strong_copy", "noise"]


def test_importance_ranks_signal_over_noise():
    X, y, names = _signal_matrix()
    hyper = ForestHyper(n_trees=40, min_node_size=8)
    forest = grow_forest(X[: 300], y[: 300], "cart", hyper, seed=1, feature_names=names)
    imp, base = permutation_importance(forest, X[300:], y[300:], seed=0)
    assert base > 0.0
    assert imp[0] > imp[1] > 0.0
    assert imp[0] > 10.0 * max(imp[3], 0.001)


def test_importance_is_seed_deterministic():
    X, y, names = _signal_matrix(seed=3)
    hyper = ForestHyper(n_trees=20, min_node_size=8)
    forest = grow_forest(X[: 300], y[: 300], "cart", hyper, seed=1, feature_names=names)
    a, _ = permutation_importance(forest, X[300:], y[300:], seed=7)
    b, _ = permutation_importance(forest, X[300:], y[300:], seed=7)
    c, _ = permutation_importance(forest, X[300:], y[300:], seed=8)
    assert_allclose(a, b)
    assert not np.allclose(a, c)


def test_select_drops_redundant_copy():
    X, y, names = _signal_matrix()
    res = select_predictors(X, y, names, seed=0)
    assert res.chosen[0] == "strong"
    assert "strong_copy" not in res.chosen  # r > 0.99 with the winner
    assert "weak" in res.chosen
    assert res.ranking[0] == "strong"
    assert set(res.importances) == set(names)
    # repeated call is bit-identical
    again = select_predictors(X, y, names, seed=0)
    assert res == again


def test_select_respects_max_k():
    rng = np.random.default_rng(5)
    n = 360
    X = rng.uniform(0.0, 1.0, (n, 6))
    y = X @ np.array([3.0, 2.5, 2.0, 1.5, 1.0, 0.5]) + rng.normal(0.0, 0.1, n)
    res = select_predictors(X, y, [f"c{j}" for j in range(6)], max_k=2, seed=1)
    assert len(res.chosen) == 2
    res4 = select_predictors(X, y, [f"c{j}" for j in range(6)], seed=1)
    assert len(res4.chosen) <= 4


def test_select_stops_at_nonpositive_importance():
    # pure noise response: nothing should be convincingly important,
    # and certainly nothing after the importance ranking goes nonpositive
    rng = np.random.default_rng(11)
    X = rng.uniform(0.0, 1.0, (240, 3))
    y = rng.normal(0.0, 1.0, 240)
    res = select_predictors(X, y, ["a", "b", "c"], seed=2)
    for name in res.chosen:
        assert res.importances[name] > 0.0


def test_select_validation():
    X = np.zeros((100, 3))
    with pytest.raises(ValueError, match="200"):
        select_predictors(X, np.zeros(100), ["a", "b", "c"])
    X = np.zeros((240, 1))
    with pytest.raises(ValueError, match="two"):
        select_predictors(X, np.zeros(240), ["a"])
    X = np.zeros((240, 2))
    with pytest.raises(ValueError, match="names"):
        select_predictors(X, np.zeros(240), ["a", "a"])
    with pytest.raises(ValueError, match="aligned"):
        select_predictors(X, np.zeros(100), ["a", "b"])
    with pytest.raises(ValueError, match="max_k"):
        select_predictors(X, np.zeros(240), ["a", "b"], max_k=0)


def test_result_to_dict():
    res = SelectionResult(("a",), ("a", "b"), {"a": 1.0, "b": -0.1}, 0.5)
    d = res.to_dict()
    assert d["chosen"] == ["a"]
    assert d["ranking"] == ["a", "b"]
    assert d["base_mse"] == 0.5


def test_predictor_frequency_ordering():
    per_station = {
        "s1": ("MEAN", "CAPE"),
        "s2": ("MEAN",),
        "s3": ("CAPE", "HU1500"),
        "s4": SelectionResult(("MEAN",), ("MEAN",), {"MEAN": 1.0}, 0.1),
    }
    freq = predictor_frequency(per_station)
    assert freq[0] == ("MEAN", 0.75)
    assert freq[1] == ("CAPE", 0.5)
    assert freq[2] == ("HU1500", 0.25)
    # alphabetical among equals
    tied = predictor_frequency({"s1": ("B", "A")})
    assert tied == [("A", 1.0), ("B", 1.0)]
    with pytest.raises(ValueError):
        predictor_frequency({})
