"""
Revised simplex on the multi-marginal transportation polytope.

Variables are the entries of a tensor of shape ``n_0 × … × n_{d-1}``,
addressed by their flat index. The constraints say every axis sum equals its
marginal's weights. One constraint per axis ``i ≥ 1`` is implied by the
others, so the first row of each of those axes is dropped: the remaining
``m = Σ n_i − d + 1`` rows are independent, and the dual variable of a dropped
row is ``0``.
"""
from __future__ import annotations

import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from typing_extensions import Literal

from ._errors import ContractViolation, InternalInconsistencyError

__all__ = ["SimplexResult", "PivotRule", "DEGENERATE_STREAK", "simplex_maximize"]

log = logging.getLogger(__name__)

PivotRule = Literal["dantzig", "bland"]

# Degenerate pivots in a row before Bland's rule takes over
DEGENERATE_STREAK = 25
RATIO_TOL = 1e-12
NEGATIVE_TOL = 1e-9


class SimplexResult(NamedTuple):
    # flat indices of the basic variables
    basis: np.ndarray
    # their values, clipped at 0
    values: np.ndarray
    # one table per axis
    duals: Tuple[np.ndarray, ...]
    pivots: int
    # pivots priced by Bland's rule
    bland_pivots: int


class _Rows:
    """
    Row offsets of the reduced constraint system.
    """

    def __init__(self, shape: Tuple[int, ...]):
        self.shape = shape
        offsets = [0, shape[0]]
        for n in shape[1:]:
            offsets.append(offsets[-1] + n - 1)
        self.offsets = offsets
        self.m = offsets[-1]

    def of(self, index: Sequence[int]) -> List[int]:
        rows = [int(index[0])]
        for i in range(1, len(self.shape)):
            if index[i] > 0:
                rows.append(self.offsets[i] + int(index[i]) - 1)
        return rows

    def rhs(self, weights: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([weights[0]] + [w[1:] for w in weights[1:]])

    def tables(self, y: np.ndarray) -> Tuple[np.ndarray, ...]:
        tables = [y[: self.shape[0]]]
        for i in range(1, len(self.shape)):
            tables.append(
                np.concatenate([[0.0], y[self.offsets[i] : self.offsets[i + 1]]])
            )
        return tuple(tables)


def _north_west_corner(weights: Sequence[np.ndarray]) -> List[Tuple[int, ...]]:
    """
    A staircase of ``m`` index tuples forming a feasible basis. Each step
    advances the unfinished axis whose current residual is smallest.
    """
    residual = [w.astype(float).copy() for w in weights]
    index = [0] * len(weights)
    path = [tuple(index)]
    ends = [w.shape[0] - 1 for w in weights]
    while index != ends:
        amount = min(residual[i][index[i]] for i in range(len(weights)))
        for i in range(len(weights)):
            residual[i][index[i]] -= amount
        open_axes = [i for i in range(len(weights)) if index[i] < ends[i]]
        axis = min(open_axes, key=lambda i: (residual[i][index[i]], i))
        index[axis] += 1
        path.append(tuple(index))
    return path


def _basis_matrix(rows: _Rows, basis: Sequence[Tuple[int, ...]]) -> np.ndarray:
    matrix = np.zeros((rows.m, len(basis)))
    for k, index in enumerate(basis):
        matrix[rows.of(index), k] = 1.0
    return matrix


def _reduced_costs(cost: np.ndarray, duals: Tuple[np.ndarray, ...]) -> np.ndarray:
    d = cost.ndim
    result = cost.copy()
    for i, table in enumerate(duals):
        result -= table.reshape([-1 if j == i else 1 for j in range(d)])
    return result


def _use_bland(pivot_rule: PivotRule, streak: int) -> bool:
    """
    Bland's rule throughout for ``pivot_rule="bland"``, otherwise only while
    the current run of degenerate pivots is ``DEGENERATE_STREAK`` or longer.
    """
    return pivot_rule == "bland" or streak >= DEGENERATE_STREAK


def simplex_maximize(
    cost: np.ndarray,
    weights: Sequence[np.ndarray],
    pivot_rule: PivotRule = "dantzig",
    max_pivots: Optional[int] = None,
) -> SimplexResult:
    """
    Maximize ``Σ_J cost[J] γ[J]`` over tensors ``γ ≥ 0`` with axis sums
    ``weights``.

    Entering variables are priced by largest reduced cost, lowest flat index
    on ties. Once ``DEGENERATE_STREAK`` degenerate pivots come in a row, or
    from the start with ``pivot_rule="bland"``, Bland's rule picks both the
    entering (lowest index) and the leaving variable (lowest index among
    ratio ties), so a degenerate run cannot cycle. The first nondegenerate
    pivot hands pricing back to the largest reduced cost.
    """
    shape = cost.shape
    if len(weights) != cost.ndim or tuple(w.shape[0] for w in weights) != shape:
        raise ContractViolation(
            f"Cost shape {shape} does not match the marginal sizes "
            f"{tuple(w.shape[0] for w in weights)}"
        )
    if pivot_rule not in ("dantzig", "bland"):
        raise ContractViolation(f"Unknown pivot rule {pivot_rule!r}")
    rows = _Rows(shape)
    m = rows.m
    if max_pivots is None:
        max_pivots = 100 * m + 10_000
    b = rows.rhs(weights)
    flat_cost = cost.reshape(-1)
    tol = 1e-11 * max(1.0, float(np.abs(cost).max()) if cost.size else 1.0)

    basis_tuples = _north_west_corner(weights)
    basis = np.array([np.ravel_multi_index(j, shape) for j in basis_tuples], dtype=np.int64)
    streak = 0
    pivots = 0
    bland_pivots = 0
    while True:
        matrix = _basis_matrix(rows, basis_tuples)
        lu = lu_factor(matrix)
        values = lu_solve(lu, b)
        if values.min(initial=0.0) < -NEGATIVE_TOL:
            raise InternalInconsistencyError(
                f"Basic solution went negative ({values.min():.3g}) after {pivots} pivots"
            )
        values = np.maximum(values, 0.0)
        y = lu_solve(lu, flat_cost[basis], trans=1)
        duals = rows.tables(y)
        reduced = _reduced_costs(cost, duals).reshape(-1)

        bland = _use_bland(pivot_rule, streak)
        if bland:
            candidates = np.flatnonzero(reduced > tol)
            entering = int(candidates[0]) if candidates.shape[0] else -1
        else:
            best = int(np.argmax(reduced))
            entering = best if reduced[best] > tol else -1
        if entering < 0:
            log.debug("simplex optimal after %d pivots, m = %d", pivots, m)
            return SimplexResult(basis, values, duals, pivots, bland_pivots)

        if pivots >= max_pivots:
            raise InternalInconsistencyError(
                f"Simplex did not converge within {max_pivots} pivots"
            )
        entering_tuple = tuple(int(j) for j in np.unravel_index(entering, shape))
        column = np.zeros(m)
        column[rows.of(entering_tuple)] = 1.0
        direction = lu_solve(lu, column)
        positive = np.flatnonzero(direction > RATIO_TOL)
        if positive.shape[0] == 0:
            raise InternalInconsistencyError("Transportation LP reported unbounded")
        ratios = values[positive] / direction[positive]
        step = ratios.min()
        ties = positive[ratios <= step + RATIO_TOL * max(1.0, step)]
        # lowest variable index among the ties
        leave = int(ties[np.argmin(basis[ties])])

        if step <= RATIO_TOL:
            streak += 1
            if streak == DEGENERATE_STREAK and pivot_rule != "bland":
                log.debug("Bland's rule after %d degenerate pivots", streak)
        else:
            if bland and pivot_rule != "bland":
                log.debug("nondegenerate pivot, back to Dantzig pricing")
            streak = 0
        bland_pivots += int(bland)
        basis[leave] = entering
        basis_tuples[leave] = entering_tuple
        pivots += 1
