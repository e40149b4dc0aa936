"""
Discrete multi-marginal Kantorovich problems for the determinant objective:
objective tensors, the exact solver, dual potentials and their certification.
"""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import special_ortho_group

from . import (
    OBJECTIVES,
    Coupling,
    DiscreteMeasure,
    PotentialSet,
    RadialMeasure,
    SolveReport,
)
from ._errors import ContractViolation, InternalInconsistencyError, ResourceGuardError
from ._linalg import MAX_DIM, batch_det, rotate_minus_quarter, uniform_directions
from ._measures import quantile
from ._random import CHUNK_SIZE, RngState, as_generator, map_chunks
from ._simplex import PivotRule, simplex_maximize

__all__ = [
    "MAX_ENTRIES",
    "GAP_TOL",
    "FEASIBILITY_TOL",
    "young_exponents",
    "objective_tensor",
    "young_tensor",
    "inner_product_tensor",
    "integrability_constant",
    "solve_cost_tensor",
    "solve_primal",
    "convexify",
    "feasibility_slack",
    "dual_value",
    "normalize",
    "duality_gap",
    "is_certified",
    "potential_bounds",
    "design_directions",
    "discretize_radial_instance",
]

log = logging.getLogger(__name__)

MAX_ENTRIES = 10 ** 6
GAP_TOL = 1e-9
FEASIBILITY_TOL = 1e-9


def _check_marginals(marginals: Sequence[DiscreteMeasure]) -> int:
    d = len(marginals)
    if not 2 <= d <= MAX_DIM:
        raise ContractViolation(f"Need between 2 and {MAX_DIM} marginals, got {d}")
    for i, mu in enumerate(marginals):
        if mu.dim != d:
            raise ContractViolation(
                f"Marginal {i} lives in R^{mu.dim}, expected R^{d} for {d} marginals"
            )
    return d


def _guard(shape: Tuple[int, ...], max_entries: int) -> int:
    size = int(np.prod(shape, dtype=np.int64))
    if size > max_entries:
        raise ResourceGuardError(
            f"The objective tensor {shape} has {size} entries, above the guard {max_entries}"
        )
    return size


def young_exponents(d: int, exponents: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Validate Young exponents ``p_i > 1`` with ``Σ 1/p_i = 1``, defaulting to
    ``p_i = d``.
    """
    if exponents is None:
        return np.full(d, float(d))
    p = np.asarray(exponents, dtype=float)
    if p.shape != (d,) or not np.all(np.isfinite(p)) or np.any(p <= 1):
        raise ContractViolation(f"Expected {d} exponents above 1, got {exponents!r}")
    if abs(np.sum(1 / p) - 1) > 1e-12:
        raise ContractViolation(f"Exponents must satisfy Σ 1/p_i = 1, got {np.sum(1 / p)!r}")
    return p


def _broadcast(table: np.ndarray, i: int, d: int) -> np.ndarray:
    return table.reshape([-1 if j == i else 1 for j in range(d)])


def young_tensor(
    marginals: Sequence[DiscreteMeasure], exponents: Optional[Sequence[float]] = None
) -> np.ndarray:
    """
    ``H_0 = Σ_i |x_i|^{p_i} / p_i`` on every index tuple.
    """
    d = _check_marginals(marginals)
    p = young_exponents(d, exponents)
    result = np.zeros(tuple(mu.n for mu in marginals))
    for i, mu in enumerate(marginals):
        result = result + _broadcast(np.linalg.norm(mu.atoms, axis=1) ** p[i] / p[i], i, d)
    return result


def objective_tensor(
    marginals: Sequence[DiscreteMeasure],
    objective: str = "det",
    exponents: Optional[Sequence[float]] = None,
    max_entries: int = MAX_ENTRIES,
) -> np.ndarray:
    """
    The objective on every tuple of atoms, shape ``n_1 × … × n_d``.

    ``det_plus_h0`` and ``det_minus_h0`` add or subtract the Young bound, which
    makes the objective non-negative or non-positive respectively.
    """
    d = _check_marginals(marginals)
    if objective not in OBJECTIVES:
        raise ContractViolation(f"Unknown objective {objective!r}, expected one of {OBJECTIVES}")
    shape = tuple(mu.n for mu in marginals)
    _guard(shape, max_entries)

    def chunk(k: int, size: int) -> np.ndarray:
        flat = np.arange(k * CHUNK_SIZE, k * CHUNK_SIZE + size)
        index = np.unravel_index(flat, shape)
        tuples = np.stack([mu.atoms[index[i]] for i, mu in enumerate(marginals)], axis=1)
        return batch_det(tuples)

    size = int(np.prod(shape))
    tensor = np.concatenate(map_chunks(chunk, size)).reshape(shape)
    if objective == "absdet":
        return np.abs(tensor)
    if objective == "det_plus_h0":
        return tensor + young_tensor(marginals, exponents)
    if objective == "det_minus_h0":
        return tensor - young_tensor(marginals, exponents)
    return tensor


def inner_product_tensor(mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> np.ndarray:
    """
    ``⟨x, R y⟩`` with ``R`` the rotation by ``-π/2``, which equals ``det(x, y)``
    in the plane.
    """
    if mu1.dim != 2 or mu2.dim != 2:
        raise ContractViolation("The rotated inner product is defined in the plane only")
    return mu1.atoms @ rotate_minus_quarter(mu2.atoms).T


def integrability_constant(
    marginals: Sequence[DiscreteMeasure], exponents: Optional[Sequence[float]] = None
) -> float:
    """
    ``Σ_i ∫|x|^{p_i}/p_i dμ_i``, a bound on ``|∫det dγ|`` for every plan.
    """
    d = _check_marginals(marginals)
    p = young_exponents(d, exponents)
    return float(sum(mu.mean_power(p[i]) / p[i] for i, mu in enumerate(marginals)))


def solve_cost_tensor(
    cost: np.ndarray,
    weights: Sequence[np.ndarray],
    pivot_rule: PivotRule = "dantzig",
) -> Tuple[np.ndarray, Tuple[np.ndarray, ...], float, int]:
    """
    Maximize any tabulated objective over the transportation polytope.

    Returns the optimal mass tensor, the dual tables, the value and the
    number of pivots.
    """
    cost = np.asarray(cost, dtype=float)
    weights = [np.asarray(w, dtype=float) for w in weights]
    result = simplex_maximize(cost, weights, pivot_rule=pivot_rule)
    mass = np.zeros(cost.size)
    np.add.at(mass, result.basis, result.values)
    value = float(np.dot(cost.reshape(-1)[result.basis], result.values))
    return mass.reshape(cost.shape), result.duals, value, result.pivots


def solve_primal(
    marginals: Sequence[DiscreteMeasure],
    objective: str = "det",
    pivot_rule: PivotRule = "dantzig",
    max_entries: int = MAX_ENTRIES,
) -> SolveReport:
    """
    Exact optimal plan and normalized dual potentials.
    """
    marginals = tuple(marginals)
    cost = objective_tensor(marginals, objective, max_entries=max_entries)
    mass, tables, primal, pivots = solve_cost_tensor(
        cost, [mu.weights for mu in marginals], pivot_rule
    )
    potentials = normalize(PotentialSet(tables))
    dual = dual_value(potentials, marginals, cost)
    report = SolveReport(
        primal_value=primal,
        dual_value=dual,
        gap=dual - primal,
        plan=Coupling(marginals, np.maximum(mass, 0.0)),
        potentials=potentials,
        pivots=pivots,
        objective=objective,
    )
    log.info(
        "solved %s over %s: value %.12g, gap %.3g, %d pivots",
        objective,
        cost.shape,
        primal,
        report.gap,
        pivots,
    )
    return report


def convexify(
    potentials: PotentialSet,
    marginals: Sequence[DiscreteMeasure],
    objective: str = "det",
    sweep_order: Optional[Sequence[int]] = None,
    cost: Optional[np.ndarray] = None,
) -> PotentialSet:
    """
    One sweep of ``φ_i(a) ← max_{other indices} (H − Σ_{j≠i} φ_j)`` in
    ``sweep_order`` (default ``0, …, d-1``).

    After the sweep the potentials are feasible and every one of them is the
    transform of the others, so a second sweep is a no-op.
    """
    if cost is None:
        cost = objective_tensor(marginals, objective)
    d = cost.ndim
    if len(potentials.tables) != d or potentials.shape != cost.shape:
        raise ContractViolation(
            f"Potentials of shape {potentials.shape} do not match the objective {cost.shape}"
        )
    order = list(range(d)) if sweep_order is None else [int(i) for i in sweep_order]
    if sorted(order) != list(range(d)):
        raise ContractViolation(f"Sweep order must be a permutation of 0..{d - 1}")
    tables: List[np.ndarray] = [np.array(t) for t in potentials.tables]
    for i in order:
        others = np.zeros(cost.shape)
        for j, table in enumerate(tables):
            if j != i:
                others = others + _broadcast(table, j, d)
        axes = tuple(j for j in range(d) if j != i)
        tables[i] = (cost - others).max(axis=axes)
    return PotentialSet(tuple(tables))


def feasibility_slack(
    potentials: PotentialSet, cost: np.ndarray
) -> Tuple[float, Tuple[int, ...]]:
    """
    ``min_J (Σ_i φ_i[j_i] − H[J])`` and the index tuple attaining it.
    """
    slack = potentials.total() - cost
    worst = np.unravel_index(int(np.argmin(slack)), slack.shape)
    return float(slack[worst]), tuple(int(j) for j in worst)


def dual_value(
    potentials: PotentialSet,
    marginals: Sequence[DiscreteMeasure],
    cost: Optional[np.ndarray] = None,
) -> float:
    """
    ``Σ_i Σ_j φ_i[j] w_i[j]``. When ``cost`` is given, infeasibility is logged
    with its worst violation; the value is returned either way.
    """
    if len(potentials.tables) != len(marginals):
        raise ContractViolation("One potential table per marginal is required")
    value = 0.0
    for table, mu in zip(potentials.tables, marginals):
        if table.shape[0] != mu.n:
            raise ContractViolation(f"Table of length {table.shape[0]} for {mu.n} atoms")
        value += float(np.dot(table, mu.weights))
    if cost is not None:
        slack, worst = feasibility_slack(potentials, cost)
        if slack < -FEASIBILITY_TOL:
            log.warning("potentials infeasible by %.3g at %s", -slack, worst)
    return value


def normalize(potentials: PotentialSet) -> PotentialSet:
    """
    Shift ``min φ_i`` to 0 for every table but the last, which absorbs the
    shifts. Dual values are unchanged.
    """
    tables = [np.array(t) for t in potentials.tables]
    for i in range(len(tables) - 1):
        shift = tables[i].min()
        tables[i] = tables[i] - shift
        tables[-1] = tables[-1] + shift
    return PotentialSet(tuple(tables))


def duality_gap(report: SolveReport) -> float:
    gap = report.dual_value - report.primal_value
    if gap < -GAP_TOL * (1 + abs(report.primal_value)):
        raise InternalInconsistencyError(
            f"Dual value {report.dual_value!r} is below primal value {report.primal_value!r}"
        )
    return gap


def is_certified(report: SolveReport, tol: float = GAP_TOL) -> bool:
    return duality_gap(report) <= tol * (1 + abs(report.primal_value))


def potential_bounds(potentials: PotentialSet, cost: np.ndarray) -> float:
    """
    Worst violation of ``min H ≤ φ_d ≤ max H`` and ``0 ≤ φ_i ≤ max H − min H``
    (``i < d``), which hold for normalized convexified potentials.
    """
    low, high = float(cost.min()), float(cost.max())
    violation = 0.0
    *firsts, last = potentials.tables
    for table in firsts:
        violation = max(violation, -table.min(), table.max() - (high - low))
    violation = max(violation, low - last.min(), last.max() - high)
    return float(violation)


def design_directions(d: int, n_dirs: int, rng: np.random.Generator) -> np.ndarray:
    """
    ``n_dirs`` unit vectors: unions of randomly rotated cross-polytopes
    ``{±e_k}``, each an exact orthogonal frame, topped up with uniform
    draws. Fewer than ``2d`` directions take ``e_1, −e_1, e_2, …`` in order.
    """
    if n_dirs < 1:
        raise ContractViolation(f"Need at least one direction, got {n_dirs}")
    if n_dirs < 2 * d:
        axes = np.repeat(np.eye(d), 2, axis=0) * np.tile([1.0, -1.0], d)[:, None]
        return axes[:n_dirs]
    n_frames, rest = divmod(n_dirs, 2 * d)
    rotations = np.reshape(
        special_ortho_group.rvs(d, size=n_frames, random_state=rng), (-1, d, d)
    )
    # columns of each rotation, each followed by its antipode
    columns = np.swapaxes(rotations, 1, 2)
    frames = np.stack([columns, -columns], axis=2).reshape(-1, d)
    return np.concatenate([frames, uniform_directions(rest, d, rng)])


def discretize_radial_instance(
    marginals: Sequence[RadialMeasure],
    n_radii: int,
    n_dirs: int,
    rng: Union[np.random.Generator, RngState],
    scheme: str = "design",
    max_entries: int = MAX_ENTRIES,
) -> Tuple[DiscreteMeasure, ...]:
    """
    Discretize radial laws with ``n_radii`` quantile-midpoint radii times one
    shared set of ``n_dirs`` directions, all atoms equally weighted.
    """
    d = len(marginals)
    if not 2 <= d <= MAX_DIM:
        raise ContractViolation(f"Need between 2 and {MAX_DIM} marginals, got {d}")
    if n_radii < 1:
        raise ContractViolation(f"Need at least one radius, got {n_radii}")
    _guard((n_radii * n_dirs,) * d, max_entries)
    gen = as_generator(rng)
    if scheme == "design":
        directions = design_directions(d, n_dirs, gen)
    elif scheme == "uniform":
        if n_dirs < 1:
            raise ContractViolation(f"Need at least one direction, got {n_dirs}")
        directions = uniform_directions(n_dirs, d, gen)
    else:
        raise ContractViolation(f"Unknown direction scheme {scheme!r}")
    levels = (np.arange(n_radii) + 0.5) / n_radii
    result = []
    for mu in marginals:
        radii = np.asarray(quantile(mu, levels))
        atoms = (radii[:, None, None] * directions[None, :, :]).reshape(-1, d)
        result.append(DiscreteMeasure.uniform(atoms))
    return tuple(result)
