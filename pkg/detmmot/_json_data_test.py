from __future__ import annotations

import numpy as np
import pytest

from . import ConditionRecord, DiscreteMeasure, RadialMeasure, RadialSolution
from ._errors import ContractViolation
from ._json_data import (
    dumps,
    float_from_json,
    instance_from_json,
    instance_to_json,
    loads,
    measure_from_json,
    measure_to_json,
    radial_solution_from_json,
    radial_solution_to_json,
    report_from_json,
    report_to_json,
    validate,
    value_to_json,
)
from ._lp import solve_primal
from ._radial import solve_radial


@pytest.mark.parametrize(
    "value, expected",
    [
        pytest.param(float("inf"), {"float": "inf"}, id="inf"),
        pytest.param(-np.inf, {"float": "-inf"}, id="negative inf"),
        pytest.param(float("nan"), {"float": "nan"}, id="nan"),
        pytest.param(2 ** 60, {"int": str(2 ** 60)}, id="big int"),
        pytest.param(np.int64(3), 3, id="numpy int"),
        pytest.param(np.bool_(True), True, id="numpy bool"),
        pytest.param(np.array([[1.0, 2.0]]), [[1.0, 2.0]], id="array"),
        pytest.param((1, "a", None), [1, "a", None], id="tuple"),
        pytest.param({1: 0.5}, {"1": 0.5}, id="dict keys"),
    ],
)
def test_value_to_json(value, expected):
    assert value_to_json(value) == expected


def test_value_to_json_hides_defaults():
    record = ConditionRecord("tightness", residual=1e-12, tolerance=1e-6, passed=True)
    assert value_to_json(record) == {
        "name": "tightness",
        "residual": 1e-12,
        "tolerance": 1e-6,
        "passed": True,
    }


def test_value_to_json_rejects():
    with pytest.raises(NotImplementedError):
        value_to_json(object())


@pytest.mark.parametrize(
    "value, expected",
    [
        pytest.param({"float": "inf"}, float("inf"), id="inf"),
        pytest.param(3, 3.0, id="int"),
        pytest.param(0.25, 0.25, id="float"),
    ],
)
def test_float_from_json(value, expected):
    assert float_from_json(value) == expected


@pytest.mark.parametrize("value", [True, "1.0", {"float": "huge"}])
def test_float_from_json_rejects(value):
    with pytest.raises(ContractViolation):
        float_from_json(value)


def test_loads_malformed():
    with pytest.raises(ContractViolation):
        loads(b"{not json")


def test_measures():
    discrete = DiscreteMeasure.uniform([[1.0, 0.0], [0.0, 2.0]])
    again = measure_from_json(loads(dumps(measure_to_json(discrete))))
    np.testing.assert_array_equal(again.atoms, discrete.atoms)
    np.testing.assert_array_equal(again.weights, discrete.weights)

    radial = RadialMeasure.uniform_interval(0.5, 1.5)
    again = measure_from_json(loads(dumps(radial.to_json_data())))
    assert isinstance(again, RadialMeasure)
    np.testing.assert_array_equal(again.quantile_r, [0.5, 1.5])
    assert again.atomless


@pytest.mark.parametrize(
    "value",
    [
        pytest.param({"type": "discrete", "dim": 2, "atoms": [[1, 0]]}, id="missing weights"),
        pytest.param(
            {"type": "discrete", "dim": 2, "atoms": [[1, 0]], "weights": [-1]},
            id="negative weight",
        ),
        pytest.param(
            {"type": "discrete", "dim": 2, "atoms": [[1, 0]], "weights": [0.5]},
            id="weights do not sum to one",
        ),
        pytest.param(
            {"type": "discrete", "dim": 3, "atoms": [[1, 0]], "weights": [1]},
            id="wrong dimension",
        ),
        pytest.param({"type": "radial", "quantile_u": [0, 1]}, id="missing radii"),
        pytest.param({"type": "other"}, id="unknown type"),
        pytest.param([1, 2], id="not an object"),
    ],
)
def test_measure_from_json_rejects(value):
    with pytest.raises(ContractViolation):
        measure_from_json(value)


def test_instance_roundtrip():
    marginals = [DiscreteMeasure.dirac(row) for row in np.eye(3)]
    data = loads(dumps(instance_to_json(marginals, "absdet")))
    again, objective = instance_from_json(data)
    assert objective == "absdet"
    assert len(again) == 3
    np.testing.assert_array_equal(again[2].atoms, [[0.0, 0.0, 1.0]])


def test_instance_default_objective():
    data = instance_to_json([DiscreteMeasure.dirac([1.0, 0.0])] * 2)
    del data["objective"]
    assert instance_from_json(data)[1] == "det"


def test_instance_rejects_objective():
    data = instance_to_json([DiscreteMeasure.dirac([1.0, 0.0])] * 2)
    data["objective"] = "trace"
    with pytest.raises(ContractViolation):
        instance_from_json(data)


def test_report_roundtrip():
    rng = np.random.default_rng(0)
    marginals = [DiscreteMeasure.uniform(rng.standard_normal((3, 3))) for _ in range(3)]
    report = solve_primal(marginals)
    again = report_from_json(loads(dumps(report_to_json(report))))
    assert again.primal_value == report.primal_value
    assert again.dual_value == report.dual_value
    assert again.objective == "det"
    np.testing.assert_allclose(again.plan.mass, report.plan.mass, atol=1e-12)
    for a, b in zip(again.potentials.tables, report.potentials.tables):
        np.testing.assert_array_equal(a, b)
    assert report.to_json_data() == report_to_json(report)


def test_report_rejects_index():
    marginals = [DiscreteMeasure.dirac([1.0, 0.0]), DiscreteMeasure.dirac([0.0, 1.0])]
    data = report_to_json(solve_primal(marginals))
    data["plan"] = [[[0, 5], 1.0]]
    with pytest.raises(ContractViolation):
        report_from_json(data)


def test_radial_solution_roundtrip():
    solution = solve_radial([RadialMeasure.uniform_ball(2, n_knots=64)] * 2)
    data = loads(dumps(radial_solution_to_json(solution)))
    assert data["type"] == "radial_solution"
    again = radial_solution_from_json(data)
    assert again.value == solution.value
    np.testing.assert_array_equal(again.knot_potentials, solution.knot_potentials)
    assert isinstance(RadialSolution.from_json_data(data), RadialSolution)


def test_validate_definition():
    data = {"marginals": [measure_to_json(RadialMeasure.uniform_interval(0, 1))]}
    assert validate(data, "radial_marginals") is data
    with pytest.raises(ContractViolation):
        validate({"marginals": []}, "radial_marginals")
    with pytest.raises(ContractViolation):
        validate({"marginals": [{"type": "discrete"}]}, "radial_marginals")
