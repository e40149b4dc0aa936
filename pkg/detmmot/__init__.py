"""
Multi-marginal optimal transport for the determinant objective.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Literal

from ._errors import (
    AtomicMarginalError,
    ContractViolation,
    DegenerateInputError,
    DetmmotError,
    InternalInconsistencyError,
    ResourceGuardError,
)
from ._random import DEFAULT_SEED, RngState
from ._validate import readonly_array
from .dataclass_hide_default import DataclassHideDefault

__version__ = "0.1.0"

# Absolute tolerance on unit-normalized vectors for frame orthogonality
TAU_ORTH = 1e-8
# Default number of knots of a tabulated quantile function
DEFAULT_KNOTS = 1024
# Radii closer than this are the same atom
ATOM_TOL = 1e-12

# The objective maximized by the LP. The shifted variants add or subtract the
# Young bound H_0, which makes them sign definite.
Objective = Literal["det", "absdet", "det_plus_h0", "det_minus_h0"]
OBJECTIVES: Tuple[str, ...] = ("det", "absdet", "det_plus_h0", "det_minus_h0")


@dataclass(frozen=True, eq=False)
class Frame(DataclassHideDefault):
    """
    A family of ``k ≤ d`` nonzero, pairwise orthogonal vectors in R^d, stored
    as the rows of a ``(k, d)`` array. ``k`` may be zero.
    """

    vectors: np.ndarray = field(metadata={"positional": True})

    def __post_init__(self):
        vectors = readonly_array(self.vectors, "frame vectors", ndim=2)
        k, d = vectors.shape
        if k > d:
            raise ContractViolation(f"A frame in R^{d} has at most {d} vectors, got {k}")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            raise DegenerateInputError("Frame vectors must be nonzero")
        units = vectors / norms[:, None]
        gram = units @ units.T - np.eye(k)
        if k and np.abs(gram).max() > TAU_ORTH:
            raise DegenerateInputError(
                f"Frame vectors are not orthogonal (max |cos| = {np.abs(gram).max():.3g})"
            )
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def empty(cls, dim: int) -> Frame:
        return cls(np.empty((0, dim)))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def complement(self) -> Frame:
        """
        Orthonormal basis of the orthogonal complement.
        """
        from ._linalg import complement_basis

        return complement_basis(self)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure(DataclassHideDefault):
    """
    A finitely supported probability measure on R^d.
    """

    # (n, d) array, one atom per row
    atoms: np.ndarray = field(metadata={"positional": True})

    # (n,) probability weights
    weights: np.ndarray = field(metadata={"positional": True})

    def __post_init__(self):
        atoms = readonly_array(self.atoms, "atoms", ndim=2)
        weights = readonly_array(self.weights, "weights", ndim=1)
        if atoms.shape[0] == 0:
            raise ContractViolation("A discrete measure needs at least one atom")
        if atoms.shape[0] != weights.shape[0]:
            raise ContractViolation(
                f"Got {atoms.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if np.any(weights < 0):
            raise ContractViolation("Weights must be non-negative")
        if abs(weights.sum() - 1) > 1e-12:
            raise ContractViolation(f"Weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, atoms: object) -> DiscreteMeasure:
        array = np.asarray(atoms, dtype=float)
        n = array.shape[0] if array.ndim else 0
        return cls(array, np.full(n, 1 / n) if n else np.empty(0))

    @classmethod
    def dirac(cls, point: object) -> DiscreteMeasure:
        return cls(np.asarray(point, dtype=float)[None, :], np.ones(1))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    def radial_projection(self) -> RadialMeasure:
        """
        The law of ``|x|`` under this measure.
        """
        from ._measures import radial_projection

        return radial_projection(self)

    def mean_power(self, p: float) -> float:
        """
        ``∫|x|^p dμ``
        """
        return float(np.dot(np.linalg.norm(self.atoms, axis=1) ** p, self.weights))

    @classmethod
    def from_json_data(cls, json_data: dict) -> DiscreteMeasure:
        from ._json_data import discrete_measure_from_json

        return discrete_measure_from_json(json_data)

    def to_json_data(self) -> dict:
        from ._json_data import measure_to_json

        return measure_to_json(self)


@dataclass(frozen=True, eq=False)
class RadialMeasure(DataclassHideDefault):
    """
    A probability measure on ``[0, ∞)`` stored as a tabulated quantile function.

    The knots ``(quantile_u[k], quantile_r[k])`` are joined linearly. Repeated
    ``u`` knots encode jumps of the quantile (gaps in the support); flat
    segments encode atoms. Evaluation is left-continuous, matching the
    generalized inverse of the CDF.
    """

    quantile_u: np.ndarray = field(metadata={"positional": True})
    quantile_r: np.ndarray = field(metadata={"positional": True})

    # Derived from the table when not given: true when no flat segment has
    # positive length in u.
    atomless: Optional[bool] = field(default=None)

    def __post_init__(self):
        u = readonly_array(self.quantile_u, "quantile_u", ndim=1)
        r = readonly_array(self.quantile_r, "quantile_r", ndim=1)
        if u.shape != r.shape or u.shape[0] < 2:
            raise ContractViolation(
                f"Quantile tables need matching lengths ≥ 2, got {u.shape} and {r.shape}"
            )
        if u[0] != 0 or u[-1] != 1 or np.any(np.diff(u) < 0):
            raise ContractViolation("quantile_u must be nondecreasing from 0 to 1")
        if r[0] < 0 or np.any(np.diff(r) < 0):
            raise ContractViolation("quantile_r must be nondecreasing and non-negative")
        object.__setattr__(self, "quantile_u", u)
        object.__setattr__(self, "quantile_r", r)
        if self.atomless is None:
            object.__setattr__(
                self, "atomless", bool(np.all(np.diff(r)[np.diff(u) > 0] > 0))
            )

    @classmethod
    def from_quantile_function(
        cls, quantile: Callable[[np.ndarray], np.ndarray], n_knots: int = DEFAULT_KNOTS
    ) -> RadialMeasure:
        """
        Tabulate a vectorized quantile function on a uniform grid of ``n_knots``.
        """
        u = np.linspace(0, 1, n_knots)
        # Rounding in the callable must not break monotonicity
        r = np.maximum.accumulate(np.asarray(quantile(u), dtype=float))
        return cls(u, r)

    @classmethod
    def uniform_ball(cls, dim: int, n_knots: int = DEFAULT_KNOTS) -> RadialMeasure:
        """
        Radius of a uniform point in the unit ball of R^dim: CDF ``r^dim``.
        """
        if dim < 1:
            raise ContractViolation(f"Dimension must be positive, got {dim}")
        return cls.from_quantile_function(lambda u: u ** (1 / dim), n_knots)

    @classmethod
    def uniform_interval(cls, low: float, high: float) -> RadialMeasure:
        return cls(np.array([0.0, 1.0]), np.array([low, high]))

    @property
    def n_knots(self) -> int:
        return self.quantile_u.shape[0]

    @property
    def r_min(self) -> float:
        return float(self.quantile_r[0])

    @property
    def r_max(self) -> float:
        return float(self.quantile_r[-1])

    def quantile(self, u):
        from ._measures import quantile

        return quantile(self, u)

    def cdf(self, r):
        from ._measures import cdf

        return cdf(self, r)

    def resample(self, n_knots: int = DEFAULT_KNOTS) -> RadialMeasure:
        from ._measures import resample

        return resample(self, np.linspace(0, 1, n_knots))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(rng.random(n))

    @classmethod
    def from_json_data(cls, json_data: dict) -> RadialMeasure:
        from ._json_data import radial_measure_from_json

        return radial_measure_from_json(json_data)

    def to_json_data(self) -> dict:
        from ._json_data import measure_to_json

        return measure_to_json(self)


@dataclass(frozen=True, eq=False)
class MonotoneMap(DataclassHideDefault):
    """
    A nondecreasing map ``r ↦ H(r) ≥ 0`` tabulated on strictly increasing
    knots and joined linearly. Outside ``[r_min, r_max]`` it is constant.
    """

    knots: np.ndarray = field(metadata={"positional": True})
    values: np.ndarray = field(metadata={"positional": True})

    def __post_init__(self):
        knots = readonly_array(self.knots, "knots", ndim=1)
        values = readonly_array(self.values, "values", ndim=1)
        if knots.shape != values.shape or knots.shape[0] < 2:
            raise ContractViolation("A monotone map needs at least two matching knots")
        if np.any(np.diff(knots) <= 0):
            raise ContractViolation("Monotone map knots must be strictly increasing")
        if values[0] < 0 or np.any(np.diff(values) < 0):
            raise ContractViolation("Monotone map values must be nondecreasing and ≥ 0")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def identity(cls, knots: np.ndarray) -> MonotoneMap:
        return cls(knots, knots)

    @property
    def domain(self) -> Tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, r):
        result = np.interp(r, self.knots, self.values)
        return float(result) if np.ndim(result) == 0 else result

    def then(self, other: MonotoneMap) -> MonotoneMap:
        """
        The composition ``r ↦ other(self(r))``, tabulated on this map's knots.
        """
        return MonotoneMap(self.knots, other(self.values))


@dataclass(frozen=True, eq=False)
class RadialSolution(DataclassHideDefault):
    """
    The solution of the radial problem for atomless marginals.

    Every marginal is tabulated on the shared grid ``u_grid``; row ``i`` of
    ``radii`` holds ``Q_i`` there, so ``H_i(Q_1(u)) = Q_i(u)`` exactly at the
    knots. ``knot_potentials[i, k]`` is ``ψ_i(radii[i, k])``.
    """

    marginals: Tuple[RadialMeasure, ...]
    u_grid: np.ndarray
    radii: np.ndarray
    knot_potentials: np.ndarray
    # H_2, …, H_d
    maps: Tuple[MonotoneMap, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def potential(self, i: int, r):
        """
        ``ψ_i(r)``, extended linearly beyond the support.
        """
        from ._radial import potential

        return potential(self, i, r)

    def slope(self, i: int, r):
        """
        ``ψ_i'(r) = ∏_{j≠i} H_j(H_i^{-1}(r))``
        """
        from ._radial import slope

        return slope(self, i, r)

    def conjugate(self, i: int, t):
        """
        ``sup_r (r t − ψ_i(r))`` over the support of marginal ``i``.
        """
        from ._radial import conjugate

        return conjugate(self, i, t)

    def quantile(self, i: int, u):
        from ._measures import interpolate_left

        return interpolate_left(self.u_grid, self.radii[i], np.asarray(u, dtype=float))

    @property
    def knot_slopes(self) -> np.ndarray:
        from ._radial import knot_slopes

        return knot_slopes(self.radii)

    @property
    def is_convex(self) -> bool:
        return bool(np.all(np.diff(self.knot_slopes, axis=1) >= 0))

    def feasibility_violation(self) -> float:
        """
        ``max(0, −min(Σψ_i(r_i) − ∏r_i))`` over a product grid of the supports.
        """
        from ._radial import feasibility_violation

        return feasibility_violation(self)

    def graph_tightness_gap(self) -> float:
        """
        ``max_k |Σψ_i(Q_i(u_k)) − ∏Q_i(u_k)|`` along the monotone graph.
        """
        total = self.knot_potentials.sum(axis=0)
        return float(np.abs(total - np.prod(self.radii, axis=0)).max())

    @classmethod
    def from_json_data(cls, json_data: dict) -> RadialSolution:
        from ._json_data import radial_solution_from_json

        return radial_solution_from_json(json_data)

    def to_json_data(self) -> dict:
        from ._json_data import radial_solution_to_json

        return radial_solution_to_json(self)


@dataclass(frozen=True, eq=False)
class CouplingSampler(DataclassHideDefault):
    """
    Draws tuples from the optimal radial coupling. With ``orientation=-1`` the
    wedge closure is flipped and every tuple has ``det ≤ 0``.
    """

    solution: RadialSolution = field(metadata={"positional": True})
    orientation: int = field(default=1)

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ContractViolation(f"Orientation must be ±1, got {self.orientation}")

    @property
    def dim(self) -> int:
        return self.solution.dim

    @property
    def marginals(self) -> Tuple[RadialMeasure, ...]:
        return self.solution.marginals


@dataclass(frozen=True, eq=False)
class Coupling(DataclassHideDefault):
    """
    A discrete joint law on the product of the marginals' supports.
    ``mass[j_1, …, j_d]`` is the probability of the tuple of atoms
    ``(a_1[j_1], …, a_d[j_d])``.
    """

    marginals: Tuple[DiscreteMeasure, ...]
    mass: np.ndarray

    def __post_init__(self):
        marginals = tuple(self.marginals)
        mass = readonly_array(self.mass, "mass")
        shape = tuple(mu.n for mu in marginals)
        if mass.shape != shape:
            raise ContractViolation(f"Mass has shape {mass.shape}, expected {shape}")
        if np.any(mass < -1e-12):
            raise ContractViolation("Mass must be non-negative")
        for i, mu in enumerate(marginals):
            others = tuple(j for j in range(len(shape)) if j != i)
            sums = mass.sum(axis=others) if others else mass
            if np.abs(sums - mu.weights).max() > 1e-9:
                raise ContractViolation(f"Axis {i} sums do not match marginal {i}")
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def product(cls, marginals: Sequence[DiscreteMeasure]) -> Coupling:
        mass = np.ones(())
        for mu in marginals:
            mass = np.multiply.outer(mass, mu.weights)
        return cls(tuple(marginals), mass)

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def support(self, threshold: float = 1e-12) -> np.ndarray:
        """
        Index tuples carrying more than ``threshold`` mass, shape ``(k, d)``.
        """
        return np.argwhere(self.mass > threshold)

    def tuples(self, indices: np.ndarray) -> np.ndarray:
        """
        The point tuples ``(k, d, d)`` for an array of index tuples.
        """
        indices = np.asarray(indices, dtype=int).reshape(-1, self.dim)
        return np.stack(
            [mu.atoms[indices[:, i]] for i, mu in enumerate(self.marginals)], axis=1
        )

    def entries(self, threshold: float = 1e-12) -> Iterator[Tuple[Tuple[int, ...], float]]:
        for index in self.support(threshold):
            yield tuple(int(j) for j in index), float(self.mass[tuple(index)])


@dataclass(frozen=True, eq=False)
class PotentialSet(DataclassHideDefault):
    """
    Dual potentials, ``tables[i][j] = φ_i(a_i[j])``.
    """

    tables: Tuple[np.ndarray, ...] = field(metadata={"positional": True})

    def __post_init__(self):
        tables = tuple(
            readonly_array(t, f"potential table {i}", ndim=1)
            for i, t in enumerate(self.tables)
        )
        object.__setattr__(self, "tables", tables)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(t.shape[0] for t in self.tables)

    def total(self) -> np.ndarray:
        """
        ``Σ_i φ_i(a_i[j_i])`` as a tensor of shape ``n_1 × … × n_d``.
        """
        d = len(self.tables)
        result = np.zeros(self.shape)
        for i, table in enumerate(self.tables):
            result = result + table.reshape([-1 if j == i else 1 for j in range(d)])
        return result


@dataclass(frozen=True, eq=False)
class SolveReport(DataclassHideDefault):
    primal_value: float
    dual_value: float
    # dual_value - primal_value
    gap: float
    plan: Coupling
    potentials: PotentialSet
    pivots: int
    objective: str = field(default="det")

    def to_json_data(self) -> dict:
        from ._json_data import report_to_json

        return report_to_json(self)

    @classmethod
    def from_json_data(cls, json_data: dict) -> SolveReport:
        from ._json_data import report_from_json

        return report_from_json(json_data)


@dataclass(frozen=True)
class ConditionRecord(DataclassHideDefault):
    """
    One checked condition: its worst residual against its tolerance.
    """

    name: str = field(metadata={"positional": True})
    residual: float
    tolerance: float
    passed: bool
    # Index of the tuple with the worst residual, if any
    worst_index: Optional[int] = field(default=None)


@dataclass(frozen=True)
class CertificateReport(DataclassHideDefault):
    max_feasibility_violation: float
    max_tightness_gap: float
    max_subgradient_residual: float
    passed: bool
    details: Tuple[ConditionRecord, ...] = field(default=())
    # Tuples left out, e.g. because a norm vanished
    skipped: int = field(default=0)

    @classmethod
    def from_records(
        cls,
        records: Sequence[ConditionRecord],
        feasibility: float = 0.0,
        tightness: float = 0.0,
        subgradient: float = 0.0,
        skipped: int = 0,
    ) -> CertificateReport:
        return cls(
            max_feasibility_violation=feasibility,
            max_tightness_gap=tightness,
            max_subgradient_residual=subgradient,
            passed=all(r.passed for r in records),
            details=tuple(records),
            skipped=skipped,
        )

    @classmethod
    def combine(cls, reports: Sequence[CertificateReport]) -> CertificateReport:
        return cls(
            max_feasibility_violation=max(
                (r.max_feasibility_violation for r in reports), default=0.0
            ),
            max_tightness_gap=max((r.max_tightness_gap for r in reports), default=0.0),
            max_subgradient_residual=max(
                (r.max_subgradient_residual for r in reports), default=0.0
            ),
            passed=all(r.passed for r in reports),
            details=tuple(d for r in reports for d in r.details),
            skipped=sum(r.skipped for r in reports),
        )

    def to_json_data(self) -> dict:
        from ._json_data import value_to_json

        return value_to_json(self)  # type: ignore


@dataclass(frozen=True)
class MarginalTestReport(DataclassHideDefault):
    ks_statistic: float
    ks_pvalue: float
    mean_direction_norm: float
    mean_direction_threshold: float
    # Largest |E<u,e>^2 - 1/d| in units of its standard error
    second_moment_score: float
    passed: bool


@dataclass(frozen=True)
class FubiniEstimate(DataclassHideDefault):
    lhs: float
    rhs: float
    stderr: float
    passed: bool

    def __iter__(self) -> Iterator[float]:
        return iter((self.lhs, self.rhs, self.stderr))


@dataclass(frozen=True)
class HadamardYoung(DataclassHideDefault):
    """
    The chain ``|det(x)| ≤ ∏|x_i| ≤ Σ|x_i|^{p_i}/p_i``.
    """

    det: Union[float, np.ndarray]
    prod_norms: Union[float, np.ndarray]
    h0: Union[float, np.ndarray]

    def __iter__(self):
        return iter((self.det, self.prod_norms, self.h0))


_number = {"type": "number"}
_vector = {"type": "array", "items": _number}

_definitions = {
    "discrete_measure": {
        "description": DiscreteMeasure.__doc__,
        "type": "object",
        "required": ["type", "dim", "atoms", "weights"],
        "properties": {
            "type": {"const": "discrete"},
            "dim": {"type": "integer", "minimum": 1},
            "atoms": {"type": "array", "minItems": 1, "items": _vector},
            "weights": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "number", "minimum": 0},
            },
        },
    },
    "radial_measure": {
        "description": RadialMeasure.__doc__,
        "type": "object",
        "required": ["type", "quantile_u", "quantile_r"],
        "properties": {
            "type": {"const": "radial"},
            "quantile_u": {"type": "array", "minItems": 2, "items": _number},
            "quantile_r": {"type": "array", "minItems": 2, "items": _number},
            "atomless": {"type": "boolean"},
        },
    },
    "measure": {
        "oneOf": [
            {"$ref": "#/definitions/discrete_measure"},
            {"$ref": "#/definitions/radial_measure"},
        ]
    },
    "instance": {
        "description": "Discrete marginals and the objective to maximize.",
        "type": "object",
        "required": ["marginals"],
        "properties": {
            "objective": {"enum": list(OBJECTIVES)},
            "marginals": {
                "type": "array",
                "minItems": 2,
                "items": {"$ref": "#/definitions/discrete_measure"},
            },
        },
    },
    "radial_marginals": {
        "description": "Radial marginals, also the stored form of a RadialSolution.",
        "type": "object",
        "required": ["marginals"],
        "properties": {
            "marginals": {
                "type": "array",
                "minItems": 1,
                "items": {"$ref": "#/definitions/radial_measure"},
            },
        },
    },
    "report": {
        "description": "A solved instance.",
        "type": "object",
        "required": [
            "objective",
            "primal_value",
            "dual_value",
            "plan",
            "potentials",
            "marginals",
        ],
        "properties": {
            "objective": {"enum": list(OBJECTIVES)},
            "primal_value": _number,
            "dual_value": _number,
            "plan": {
                "type": "array",
                "items": {
                    "type": "array",
                    "minItems": 2,
                    "maxItems": 2,
                    "items": [
                        {"type": "array", "items": {"type": "integer", "minimum": 0}},
                        _number,
                    ],
                },
            },
            "potentials": {"type": "array", "items": _vector},
            "marginals": {
                "type": "array",
                "items": {"$ref": "#/definitions/discrete_measure"},
            },
        },
    },
}

JSON_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "https://github.com/detmmot/detmmot/schema.json",
    "title": "detmmot input and output files",
    "definitions": _definitions,
    "anyOf": [
        {"$ref": "#/definitions/measure"},
        {"$ref": "#/definitions/instance"},
        {"$ref": "#/definitions/radial_marginals"},
        {"$ref": "#/definitions/report"},
    ],
}

from ._linalg import (  # noqa: E402
    batch_det,
    batch_signed_wedge_excluding,
    batch_wedge,
    complement_basis,
    det,
    rotate_minus_quarter,
    sample_subsphere,
    sample_subsphere_batch,
    signed_wedge_excluding,
    uniform_directions,
    wedge,
)
from ._lp import (  # noqa: E402
    MAX_ENTRIES,
    convexify,
    design_directions,
    discretize_radial_instance,
    dual_value,
    duality_gap,
    feasibility_slack,
    inner_product_tensor,
    integrability_constant,
    is_certified,
    normalize,
    objective_tensor,
    potential_bounds,
    solve_cost_tensor,
    solve_primal,
    young_exponents,
    young_tensor,
)
from ._measures import (  # noqa: E402
    cdf,
    monotone_rearrangement,
    pushforward_check,
    quantile,
    radial_projection,
)
from ._optcheck import (  # noqa: E402
    FUBINI_CATALOG,
    check_gradient_system_3d,
    check_subgradient,
    check_tightness,
    fubini_sphere_test,
    hadamard_young_bound,
    marginal_stat_test,
    sign_audit,
)
from ._radial import (  # noqa: E402
    monge_maps_4d,
    perturbed_circle,
    sample_absdet_mixture,
    sample_coupling,
    sample_coupling_perturbed,
    solve_radial,
    summarize_samples,
    uniform_ball_points,
)

__all__ = [
    "__version__",
    "TAU_ORTH",
    "DEFAULT_KNOTS",
    "ATOM_TOL",
    "DEFAULT_SEED",
    "MAX_ENTRIES",
    "JSON_SCHEMA",
    "OBJECTIVES",
    "Objective",
    "RngState",
    "DetmmotError",
    "ContractViolation",
    "DegenerateInputError",
    "AtomicMarginalError",
    "ResourceGuardError",
    "InternalInconsistencyError",
    "Frame",
    "DiscreteMeasure",
    "RadialMeasure",
    "MonotoneMap",
    "RadialSolution",
    "CouplingSampler",
    "Coupling",
    "PotentialSet",
    "SolveReport",
    "ConditionRecord",
    "CertificateReport",
    "MarginalTestReport",
    "FubiniEstimate",
    "HadamardYoung",
    "det",
    "batch_det",
    "wedge",
    "batch_wedge",
    "signed_wedge_excluding",
    "batch_signed_wedge_excluding",
    "complement_basis",
    "sample_subsphere",
    "sample_subsphere_batch",
    "uniform_directions",
    "rotate_minus_quarter",
    "radial_projection",
    "quantile",
    "cdf",
    "monotone_rearrangement",
    "pushforward_check",
    "solve_radial",
    "sample_coupling",
    "sample_coupling_perturbed",
    "sample_absdet_mixture",
    "perturbed_circle",
    "monge_maps_4d",
    "uniform_ball_points",
    "summarize_samples",
    "objective_tensor",
    "inner_product_tensor",
    "integrability_constant",
    "solve_cost_tensor",
    "solve_primal",
    "convexify",
    "dual_value",
    "feasibility_slack",
    "normalize",
    "duality_gap",
    "potential_bounds",
    "is_certified",
    "young_tensor",
    "young_exponents",
    "design_directions",
    "discretize_radial_instance",
    "check_tightness",
    "check_subgradient",
    "check_gradient_system_3d",
    "fubini_sphere_test",
    "FUBINI_CATALOG",
    "marginal_stat_test",
    "hadamard_young_bound",
    "sign_audit",
]
