from __future__ import annotations

import functools
import pathlib
from dataclasses import fields, is_dataclass
from math import isinf, isnan
from typing import Callable, Sequence, Tuple, Union

import fastjsonschema
import numpy as np
import orjson

from . import (
    JSON_SCHEMA,
    OBJECTIVES,
    Coupling,
    DiscreteMeasure,
    PotentialSet,
    RadialMeasure,
    RadialSolution,
    SolveReport,
)
from ._errors import ContractViolation
from .dataclass_hide_default import field_is_default

__all__ = [
    "value_to_json",
    "float_from_json",
    "dumps",
    "loads",
    "read_json",
    "validate",
    "measure_to_json",
    "measure_from_json",
    "discrete_measure_from_json",
    "radial_measure_from_json",
    "radial_solution_to_json",
    "radial_solution_from_json",
    "radial_marginals_from_json",
    "instance_to_json",
    "instance_from_json",
    "report_to_json",
    "report_from_json",
]

##
# to json
##

# Integers outside of this range are encoded as strings
# https://datatracker.ietf.org/doc/html/rfc7159
MIN_INTEGER, MAX_INTEGER = (-(2**53) + 1, (2**53) - 1)


def value_to_json(value: object) -> object:
    """
    Plain JSON data for numbers, arrays, containers and dataclasses. Fields
    equal to their default are left out of dataclasses.
    """
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if isinf(value):
            return {"float": "inf" if value > 0 else "-inf"}
        if isnan(value):
            return {"float": "nan"}
        return value
    if isinstance(value, (int, np.integer)):
        value = int(value)
        if value < MIN_INTEGER or value > MAX_INTEGER:
            return {"int": str(value)}
        return value
    if isinstance(value, (str, type(None))):
        return value
    if isinstance(value, np.ndarray):
        return value_to_json(value.tolist())
    if is_dataclass(value):
        return {
            f.name: value_to_json(getattr(value, f.name))
            for f in fields(value)
            if not field_is_default(f, value)
        }
    if isinstance(value, (tuple, list)):
        return list(map(value_to_json, value))
    if isinstance(value, dict):
        return {str(k): value_to_json(v) for k, v in value.items()}
    raise NotImplementedError(f"Unsupported value type: {type(value)}")


def dumps(value: object) -> bytes:
    return orjson.dumps(
        value_to_json(value), option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
    )


def measure_to_json(mu: Union[DiscreteMeasure, RadialMeasure]) -> dict:
    if isinstance(mu, DiscreteMeasure):
        return {
            "type": "discrete",
            "dim": mu.dim,
            "atoms": mu.atoms.tolist(),
            "weights": mu.weights.tolist(),
        }
    return {
        "type": "radial",
        "quantile_u": mu.quantile_u.tolist(),
        "quantile_r": mu.quantile_r.tolist(),
        "atomless": bool(mu.atomless),
    }


def radial_solution_to_json(solution: RadialSolution) -> dict:
    """
    A solution is stored by its marginals; loading solves again.
    """
    return {
        "type": "radial_solution",
        "marginals": [measure_to_json(mu) for mu in solution.marginals],
        "value": solution.value,
    }


def instance_to_json(marginals: Sequence[DiscreteMeasure], objective: str = "det") -> dict:
    return {
        "objective": objective,
        "marginals": [measure_to_json(mu) for mu in marginals],
    }


def report_to_json(report: SolveReport) -> dict:
    return {
        "objective": report.objective,
        "primal_value": value_to_json(report.primal_value),
        "dual_value": value_to_json(report.dual_value),
        "gap": value_to_json(report.gap),
        "pivots": report.pivots,
        "plan": [[list(index), mass] for index, mass in report.plan.entries()],
        "potentials": [t.tolist() for t in report.potentials.tables],
        "marginals": [measure_to_json(mu) for mu in report.plan.marginals],
    }


##
# from json
##


def loads(data: Union[bytes, str]) -> object:
    try:
        return orjson.loads(data)
    except orjson.JSONDecodeError as e:
        raise ContractViolation(f"Malformed JSON: {e}") from e


def read_json(path: Union[str, pathlib.Path]) -> object:
    try:
        data = pathlib.Path(path).read_bytes()
    except OSError as e:
        raise ContractViolation(f"Cannot read {path}: {e}") from e
    return loads(data)


@functools.lru_cache(maxsize=None)
def _validator(definition: str) -> Callable[[object], object]:
    return fastjsonschema.compile(
        {
            "$schema": JSON_SCHEMA["$schema"],
            "definitions": JSON_SCHEMA["definitions"],
            "allOf": [{"$ref": f"#/definitions/{definition}"}],
        }
    )


def validate(value: object, definition: str) -> dict:
    """
    Check ``value`` against one definition of the package schema.
    """
    try:
        _validator(definition)(value)
    except fastjsonschema.JsonSchemaException as e:
        raise ContractViolation(f"Invalid {definition.replace('_', ' ')}: {e.message}") from e
    if not isinstance(value, dict):
        raise ContractViolation(f"Expected dict, got {type(value)}")
    return value


def float_from_json(value: object) -> float:
    if isinstance(value, dict) and "float" in value:
        v = value["float"]
        if v == "inf":
            return float("inf")
        if v == "-inf":
            return float("-inf")
        if v == "nan":
            return float("nan")
        raise ContractViolation(f"Unsupported float value: {value}")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ContractViolation(f"Expected a number, got {value!r}")


def discrete_measure_from_json(value: object) -> DiscreteMeasure:
    data = validate(value, "discrete_measure")
    atoms = np.array(data["atoms"], dtype=float)
    if atoms.ndim != 2 or atoms.shape[1] != data["dim"]:
        raise ContractViolation(f"Atoms must be points in R^{data['dim']}")
    return DiscreteMeasure(atoms, np.array(data["weights"], dtype=float))


def radial_measure_from_json(value: object) -> RadialMeasure:
    data = validate(value, "radial_measure")
    return RadialMeasure(
        np.array(data["quantile_u"], dtype=float),
        np.array(data["quantile_r"], dtype=float),
        atomless=data.get("atomless"),
    )


def measure_from_json(value: object) -> Union[DiscreteMeasure, RadialMeasure]:
    data = validate(value, "measure")
    if data["type"] == "discrete":
        return discrete_measure_from_json(data)
    return radial_measure_from_json(data)


def radial_marginals_from_json(value: object) -> Tuple[RadialMeasure, ...]:
    data = validate(value, "radial_marginals")
    return tuple(radial_measure_from_json(mu) for mu in data["marginals"])


def radial_solution_from_json(value: object) -> RadialSolution:
    from ._radial import solve_radial

    return solve_radial(radial_marginals_from_json(value))


def instance_from_json(value: object) -> Tuple[Tuple[DiscreteMeasure, ...], str]:
    data = validate(value, "instance")
    objective = data.get("objective", "det")
    if objective not in OBJECTIVES:
        raise ContractViolation(f"Unknown objective {objective!r}")
    return tuple(discrete_measure_from_json(mu) for mu in data["marginals"]), objective


def report_from_json(value: object) -> SolveReport:
    data = validate(value, "report")
    marginals = tuple(discrete_measure_from_json(mu) for mu in data["marginals"])
    shape = tuple(mu.n for mu in marginals)
    mass = np.zeros(shape)
    for index, weight in data["plan"]:
        if len(index) != len(shape) or any(j >= n for j, n in zip(index, shape)):
            raise ContractViolation(f"Plan index {index} outside the shape {shape}")
        mass[tuple(index)] = weight
    potentials = PotentialSet(tuple(np.array(t, dtype=float) for t in data["potentials"]))
    if potentials.shape != shape:
        raise ContractViolation(f"Potentials of shape {potentials.shape} for marginals {shape}")
    primal = float_from_json(data["primal_value"])
    dual = float_from_json(data["dual_value"])
    return SolveReport(
        primal_value=primal,
        dual_value=dual,
        gap=dual - primal,
        plan=Coupling(marginals, mass),
        potentials=potentials,
        pivots=int(data.get("pivots", 0)),
        objective=data["objective"],
    )
