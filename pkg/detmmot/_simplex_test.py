from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from . import _simplex
from ._errors import ContractViolation
from ._simplex import DEGENERATE_STREAK, _north_west_corner, _use_bland, simplex_maximize


def _linprog_value(cost: np.ndarray, weights) -> float:
    shape = cost.shape
    index = np.indices(shape).reshape(len(shape), -1)
    rows, rhs = [], []
    for i, w in enumerate(weights):
        for j in range(shape[i]):
            rows.append((index[i] == j).astype(float))
            rhs.append(w[j])
    result = linprog(-cost.reshape(-1), A_eq=np.array(rows), b_eq=np.array(rhs), method="highs")
    assert result.status == 0
    return -result.fun


def _random_instance(seed: int, shape):
    rng = np.random.default_rng(seed)
    cost = rng.standard_normal(shape)
    weights = [rng.dirichlet(np.ones(n)) for n in shape]
    return cost, weights


def _check(result, cost, weights):
    mass = np.zeros(cost.size)
    np.add.at(mass, result.basis, result.values)
    mass = mass.reshape(cost.shape)
    for i, w in enumerate(weights):
        axes = tuple(j for j in range(cost.ndim) if j != i)
        np.testing.assert_allclose(mass.sum(axis=axes), w, atol=1e-12)
    # dual feasibility and complementary slackness
    total = np.zeros(cost.shape)
    for i, table in enumerate(result.duals):
        total = total + table.reshape([-1 if j == i else 1 for j in range(cost.ndim)])
    assert (total - cost).min() > -1e-9
    np.testing.assert_allclose(total.reshape(-1)[result.basis], cost.reshape(-1)[result.basis], atol=1e-9)
    return float((mass * cost).sum())


@pytest.mark.parametrize(
    "shape",
    [
        pytest.param((2, 2), id="2x2"),
        pytest.param((3, 5), id="3x5"),
        pytest.param((4, 3, 2), id="4x3x2"),
        pytest.param((3, 3, 3, 2), id="four marginals"),
    ],
)
@pytest.mark.parametrize("pivot_rule", ["dantzig", "bland"])
def test_matches_linprog(shape, pivot_rule):
    cost, weights = _random_instance(17, shape)
    result = simplex_maximize(cost, weights, pivot_rule=pivot_rule)
    assert _check(result, cost, weights) == pytest.approx(_linprog_value(cost, weights), abs=1e-7)


@given(seed=st.integers(0, 2 ** 32 - 1), sizes=st.lists(st.integers(1, 4), min_size=2, max_size=3))
@settings(deadline=None, max_examples=30)
def test_random_instances(seed, sizes):
    cost, weights = _random_instance(seed, tuple(sizes))
    result = simplex_maximize(cost, weights)
    assert _check(result, cost, weights) == pytest.approx(_linprog_value(cost, weights), abs=1e-7)


def test_degenerate_uniform_weights():
    # equal weights leave many basic variables at zero
    rng = np.random.default_rng(3)
    cost = rng.integers(-2, 3, size=(6, 6, 6)).astype(float)
    weights = [np.full(6, 1 / 6)] * 3
    dantzig = simplex_maximize(cost, weights)
    bland = simplex_maximize(cost, weights, pivot_rule="bland")
    expected = _linprog_value(cost, weights)
    assert _check(dantzig, cost, weights) == pytest.approx(expected, abs=1e-7)
    assert _check(bland, cost, weights) == pytest.approx(expected, abs=1e-7)


def test_zero_weights():
    cost = np.array([[1.0, 2.0], [3.0, 4.0]])
    weights = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    result = simplex_maximize(cost, weights)
    assert _check(result, cost, weights) == pytest.approx(2.0)


def test_north_west_corner_size():
    weights = [np.full(3, 1 / 3), np.full(4, 1 / 4), np.full(2, 1 / 2)]
    path = _north_west_corner(weights)
    assert len(path) == 3 + 4 + 2 - 3 + 1
    assert path[0] == (0, 0, 0) and path[-1] == (2, 3, 1)


def test_rejects_shape_mismatch():
    with pytest.raises(ContractViolation):
        simplex_maximize(np.zeros((2, 3)), [np.full(2, 0.5), np.full(2, 0.5)])


def test_rejects_pivot_rule():
    with pytest.raises(ContractViolation):
        simplex_maximize(np.zeros((2, 2)), [np.full(2, 0.5)] * 2, pivot_rule="steepest")  # type: ignore


@pytest.mark.parametrize(
    "pivot_rule, streak, expected",
    [
        pytest.param("dantzig", 0, False, id="fresh"),
        pytest.param("dantzig", DEGENERATE_STREAK - 1, False, id="short degenerate run"),
        pytest.param("dantzig", DEGENERATE_STREAK, True, id="long degenerate run"),
        pytest.param("bland", 0, True, id="forced"),
    ],
)
def test_use_bland(pivot_rule, streak, expected):
    assert _use_bland(pivot_rule, streak) is expected


def test_pricing_returns_after_degenerate_runs(monkeypatch):
    # every degenerate pivot hands over to Bland, every nondegenerate one back
    monkeypatch.setattr(_simplex, "DEGENERATE_STREAK", 1)
    rng = np.random.default_rng(5)
    cost = rng.integers(-3, 4, size=(5, 5, 5)).astype(float)
    weights = [np.full(5, 0.2)] * 3
    result = simplex_maximize(cost, weights)
    assert _check(result, cost, weights) == pytest.approx(_linprog_value(cost, weights), abs=1e-7)
    assert result.bland_pivots < result.pivots
    forced = simplex_maximize(cost, weights, pivot_rule="bland")
    assert forced.bland_pivots == forced.pivots
