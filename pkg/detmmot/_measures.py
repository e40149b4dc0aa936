"""
Quantile tables, radial projections and monotone rearrangements.
"""
from __future__ import annotations

import logging
from typing import Sequence, Tuple, Union

import numpy as np

from . import ATOM_TOL, DEFAULT_KNOTS, DiscreteMeasure, MonotoneMap, RadialMeasure
from ._errors import AtomicMarginalError, ContractViolation

__all__ = [
    "PUSHFORWARD_GRID",
    "interpolate_left",
    "interpolate_right",
    "quantile",
    "cdf",
    "resample",
    "shared_grid",
    "radial_projection",
    "monotone_rearrangement",
    "pushforward_check",
]

log = logging.getLogger(__name__)

PUSHFORWARD_GRID = 1001


def interpolate_left(xs: np.ndarray, ys: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Piecewise linear interpolation through ``(xs, ys)`` that may repeat
    ``xs`` values. At a repeated ``x`` the value coming from the left wins.
    """
    k = np.clip(np.searchsorted(xs, x, side="left"), 1, xs.shape[0] - 1)
    x0, x1 = xs[k - 1], xs[k]
    span = x1 - x0
    t = np.divide(x - x0, span, out=np.ones_like(x, dtype=float), where=span > 0)
    t = np.clip(t, 0, 1)
    return ys[k - 1] * (1 - t) + ys[k] * t


def interpolate_right(xs: np.ndarray, ys: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Like :func:`interpolate_left`, but right-continuous, and saturating at
    ``ys[0]`` below and ``ys[-1]`` above the table.
    """
    k = np.clip(np.searchsorted(xs, x, side="right"), 1, xs.shape[0] - 1)
    x0, x1 = xs[k - 1], xs[k]
    span = x1 - x0
    t = np.divide(x - x0, span, out=np.zeros_like(x, dtype=float), where=span > 0)
    t = np.clip(t, 0, 1)
    result = ys[k - 1] * (1 - t) + ys[k] * t
    return np.where(x >= xs[-1], ys[-1], np.where(x < xs[0], ys[0], result))


def _scalar_or_array(value: np.ndarray, like: object) -> Union[float, np.ndarray]:
    return float(value) if np.ndim(like) == 0 else value


def quantile(mu: RadialMeasure, u) -> Union[float, np.ndarray]:
    """
    The left-continuous generalized inverse of the CDF of ``mu``.

    >>> quantile(RadialMeasure.uniform_interval(0, 2), 0.25)
    0.5
    """
    values = np.asarray(u, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0) or np.any(values > 1):
        raise ContractViolation("Quantile levels must lie in [0, 1]")
    return _scalar_or_array(
        interpolate_left(mu.quantile_u, mu.quantile_r, values), u
    )


def cdf(mu: RadialMeasure, r) -> Union[float, np.ndarray]:
    """
    ``P(R ≤ r)`` for ``R ~ mu``.
    """
    values = np.asarray(r, dtype=float)
    result = interpolate_right(mu.quantile_r, mu.quantile_u, values)
    # below the support the CDF is 0, not the first table value
    result = np.where(values < mu.quantile_r[0], 0.0, result)
    return _scalar_or_array(result, r)


def resample(mu: RadialMeasure, u_grid: np.ndarray) -> RadialMeasure:
    """
    Tabulate ``mu`` on another u-grid. The atomless flag is carried over when
    the resampled table keeps it consistent.
    """
    r = interpolate_left(mu.quantile_u, mu.quantile_r, u_grid)
    strict = bool(np.all(np.diff(r)[np.diff(u_grid) > 0] > 0))
    return RadialMeasure(u_grid, r, atomless=bool(mu.atomless) and strict)


def shared_grid(measures: Sequence[RadialMeasure]) -> np.ndarray:
    """
    The u-grid all measures are aligned on: their common grid when they share
    one that is strictly increasing, else a uniform grid at least as fine as
    the finest table.
    """
    first = measures[0].quantile_u
    if all(np.array_equal(mu.quantile_u, first) for mu in measures) and np.all(
        np.diff(first) > 0
    ):
        return first
    n = max([DEFAULT_KNOTS] + [mu.n_knots for mu in measures])
    log.debug("aligning %d radial measures on a %d point grid", len(measures), n)
    return np.linspace(0, 1, n)


def align(measures: Sequence[RadialMeasure]) -> Tuple[RadialMeasure, ...]:
    grid = shared_grid(measures)
    return tuple(
        mu if np.array_equal(mu.quantile_u, grid) else resample(mu, grid)
        for mu in measures
    )


def radial_projection(mu: DiscreteMeasure) -> RadialMeasure:
    """
    The law of ``|x|`` as an exact step quantile table.

    Radii closer than ``ATOM_TOL`` are merged into one atom and the result is
    flagged as atomic. A cloud of distinct radii is flagged atomless: it is
    read as a sample of a continuous radial law.

    >>> mu = DiscreteMeasure([[1.0, 0.0], [0.0, 2.0]], [0.5, 0.5])
    >>> radial_projection(mu).quantile_r.tolist()
    [1.0, 1.0, 2.0, 2.0]
    """
    radii = np.linalg.norm(mu.atoms, axis=1)
    weights = mu.weights
    keep = weights > 0
    radii, weights = radii[keep], weights[keep]
    order = np.argsort(radii, kind="stable")
    radii, weights = radii[order], weights[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(radii) > ATOM_TOL) + 1])
    merged = starts.shape[0] < radii.shape[0]
    radii = radii[starts]
    weights = np.add.reduceat(weights, starts)
    cumulative = np.minimum(np.cumsum(weights), 1.0)
    u = np.concatenate([[0.0], np.repeat(cumulative[:-1], 2), [1.0]])
    r = np.repeat(radii, 2)
    return RadialMeasure(u, r, atomless=not merged and radii.shape[0] > 1)


def monotone_rearrangement(mu1: RadialMeasure, mu2: RadialMeasure) -> MonotoneMap:
    """
    The nondecreasing map ``H = Q_2 ∘ F_1`` pushing ``mu1`` onto ``mu2``.

    Both tables are read on the union of their own u-levels and the shared
    grid, so ``H(Q_1(u)) = Q_2(u)`` at every breakpoint of either quantile.
    """
    if not mu1.atomless:
        raise AtomicMarginalError(
            "The source measure has atoms, its monotone rearrangement is not unique"
        )
    levels = np.unique(
        np.concatenate([mu1.quantile_u, mu2.quantile_u, shared_grid((mu1, mu2))])
    )
    knots = np.asarray(quantile(mu1, levels))
    # levels closer than the rounding of Q_1 collapse onto one knot
    keep = np.concatenate([[True], np.diff(knots) > 0])
    if np.count_nonzero(keep) < 2:
        raise AtomicMarginalError("The source measure is a single atom")
    return MonotoneMap(knots[keep], np.asarray(quantile(mu2, levels[keep])))


def pushforward_check(map: MonotoneMap, mu1: RadialMeasure, mu2: RadialMeasure) -> float:
    """
    ``max_u |Q_2(u) − H(Q_1(u))|`` on a uniform grid of ``PUSHFORWARD_GRID`` levels.
    """
    u = np.linspace(0, 1, PUSHFORWARD_GRID)
    return float(np.abs(quantile(mu2, u) - map(quantile(mu1, u))).max())
