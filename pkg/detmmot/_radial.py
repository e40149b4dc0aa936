"""
The radial problem: comonotone radii, convex radial potentials and samplers
for the optimal coupling and its variants.

All marginals are tabulated on one shared u-grid. Between two consecutive
knots every quantile ``Q_j`` is linear in ``u``, so the slope field
``ψ_i'(Q_i(u)) = ∏_{j≠i} Q_j(u)`` is a polynomial of degree ``d - 1`` in the
knot parameter and Gauss–Legendre with ``d`` nodes integrates it exactly.
"""
from __future__ import annotations

import logging
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Literal

from . import CouplingSampler, RadialMeasure, RadialSolution
from ._errors import AtomicMarginalError, ContractViolation
from ._linalg import (
    MAX_DIM,
    batch_det,
    batch_wedge,
    sample_subsphere_batch,
    uniform_directions,
)
from ._measures import align, interpolate_left, monotone_rearrangement
from ._random import (
    RngState,
    as_seed_sequence,
    child_sequence,
    generator,
    map_chunks,
)

__all__ = [
    "VALUE_QUADRATURE_POINTS",
    "RADIAL_FEASIBILITY_TOL",
    "MIN_RADIUS",
    "solve_radial",
    "potential",
    "slope",
    "conjugate",
    "knot_slopes",
    "feasibility_violation",
    "sample_coupling",
    "sample_coupling_perturbed",
    "perturbed_circle",
    "sample_absdet_mixture",
    "monge_maps_4d",
    "uniform_ball_points",
    "summarize_samples",
]

log = logging.getLogger(__name__)

VALUE_QUADRATURE_POINTS = 4096
RADIAL_FEASIBILITY_TOL = 1e-8
# Tuples with a smaller radius are redrawn
MIN_RADIUS = 1e-12
# Points per axis of the feasibility grid: about this many in total
FEASIBILITY_GRID_SIZE = 2e5
BISECTION_STEPS = 60

Density = Literal["direction", "frame"]


##
# Solving
##


def solve_radial(marginals: Sequence[RadialMeasure]) -> RadialSolution:
    """
    Solve the radial problem for atomless radial marginals.

    The optimal radii are comonotone, ``r_i = Q_i(u)``. The value is
    ``∫_0^1 ∏_i Q_i(u) du`` by the midpoint rule on
    ``VALUE_QUADRATURE_POINTS`` points. Potentials are anchored with
    ``ψ_i(r_min) = 0`` for all but the last one, which is anchored by
    tightness at the smallest radii.
    """
    marginals = tuple(marginals)
    d = len(marginals)
    if not 2 <= d <= MAX_DIM:
        raise ContractViolation(f"Need between 2 and {MAX_DIM} marginals, got {d}")
    for i, mu in enumerate(marginals):
        if not mu.atomless:
            raise AtomicMarginalError(f"Radial marginal {i} has atoms")
    aligned = align(marginals)
    u_grid = aligned[0].quantile_u
    radii = np.stack([mu.quantile_r for mu in aligned])
    for i, row in enumerate(radii):
        if np.any(np.diff(row) <= 0):
            raise AtomicMarginalError(
                f"Radial marginal {i} is flat on the shared grid, it has an atom"
            )
    maps = tuple(monotone_rearrangement(aligned[0], mu) for mu in aligned[1:])

    midpoints = (np.arange(VALUE_QUADRATURE_POINTS) + 0.5) / VALUE_QUADRATURE_POINTS
    value = float(
        np.mean(np.prod([interpolate_left(u_grid, r, midpoints) for r in radii], axis=0))
    )

    increments = np.stack([_interval_integrals(radii, i) for i in range(d)])
    anchors = np.zeros(d)
    anchors[-1] = np.prod(radii[:, 0])
    knot_potentials = np.concatenate(
        [anchors[:, None], anchors[:, None] + np.cumsum(increments, axis=1)], axis=1
    )
    for array in (u_grid, radii, knot_potentials):
        array.setflags(write=False)
    solution = RadialSolution(
        marginals=marginals,
        u_grid=u_grid,
        radii=radii,
        knot_potentials=knot_potentials,
        maps=maps,
        value=value,
    )
    log.info("radial value %.12g on %d knots", value, u_grid.shape[0])
    violation = feasibility_violation(solution)
    if violation > RADIAL_FEASIBILITY_TOL or not solution.is_convex:
        log.warning(
            "radial potentials fail validation: feasibility violation %.3g, convex %s",
            violation,
            solution.is_convex,
        )
    return solution


def _gauss_legendre(d: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(d)


def _partial_integrals(
    radii: np.ndarray, i: int, k: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """
    ``ψ_i(Q_i at knot k + t) − ψ_i(Q_i at knot k)`` for ``t ∈ [0, 1]``.
    """
    d = radii.shape[0]
    nodes, weights = _gauss_legendre(d)
    q = radii[:, k]
    delta = radii[:, k + 1] - q
    sigma = t[None, :] * (nodes[:, None] + 1) / 2
    others = [j for j in range(d) if j != i]
    product = np.ones_like(sigma)
    for j in others:
        product = product * (q[j][None, :] + sigma * delta[j][None, :])
    return delta[i] * t / 2 * (weights @ product)


def _interval_integrals(radii: np.ndarray, i: int) -> np.ndarray:
    m = radii.shape[1]
    return _partial_integrals(radii, i, np.arange(m - 1), np.ones(m - 1))


def knot_slopes(radii: np.ndarray) -> np.ndarray:
    """
    ``ψ_i'`` at every knot: the product of the other radii.
    """
    d = radii.shape[0]
    return np.stack([np.prod(np.delete(radii, i, axis=0), axis=0) for i in range(d)])


def _locate(solution: RadialSolution, i: int, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    row = solution.radii[i]
    k = np.clip(np.searchsorted(row, r, side="right") - 1, 0, row.shape[0] - 2)
    t = np.clip((r - row[k]) / (row[k + 1] - row[k]), 0, 1)
    return k, t


def _check_index(solution: RadialSolution, i: int) -> None:
    if not 0 <= i < solution.dim:
        raise ContractViolation(f"Marginal index must be in [0, {solution.dim}), got {i}")


def potential(solution: RadialSolution, i: int, r) -> Union[float, np.ndarray]:
    _check_index(solution, i)
    values = np.atleast_1d(np.asarray(r, dtype=float))
    row = solution.radii[i]
    k, t = _locate(solution, i, values)
    inside = solution.knot_potentials[i, k] + _partial_integrals(solution.radii, i, k, t)
    slopes = knot_slopes(solution.radii)[i]
    below = solution.knot_potentials[i, 0] + slopes[0] * (values - row[0])
    above = solution.knot_potentials[i, -1] + slopes[-1] * (values - row[-1])
    result = np.where(values < row[0], below, np.where(values > row[-1], above, inside))
    return float(result[0]) if np.ndim(r) == 0 else result


def _slope_at(radii: np.ndarray, i: int, k: np.ndarray, t: np.ndarray) -> np.ndarray:
    q = radii[:, k]
    delta = radii[:, k + 1] - q
    result = np.ones_like(t)
    for j in range(radii.shape[0]):
        if j != i:
            result = result * (q[j] + t * delta[j])
    return result


def slope(solution: RadialSolution, i: int, r) -> Union[float, np.ndarray]:
    _check_index(solution, i)
    values = np.atleast_1d(np.asarray(r, dtype=float))
    k, t = _locate(solution, i, values)
    result = _slope_at(solution.radii, i, k, t)
    return float(result[0]) if np.ndim(r) == 0 else result


def conjugate(solution: RadialSolution, i: int, s) -> Union[float, np.ndarray]:
    """
    ``sup {r s − ψ_i(r) : r in the support of marginal i}``.

    The supremum sits where the slope crosses ``s``; the crossing is
    bracketed by the knot slopes and refined by bisection.
    """
    _check_index(solution, i)
    values = np.atleast_1d(np.asarray(s, dtype=float))
    radii = solution.radii
    slopes = knot_slopes(radii)[i]
    m = radii.shape[1]
    k = np.clip(np.searchsorted(slopes, values, side="left") - 1, 0, m - 2)
    low = np.zeros_like(values)
    high = np.ones_like(values)
    for _ in range(BISECTION_STEPS):
        mid = (low + high) / 2
        below = _slope_at(radii, i, k, mid) < values
        low = np.where(below, mid, low)
        high = np.where(below, high, mid)
    t = (low + high) / 2
    argmax = radii[i, k] + t * (radii[i, k + 1] - radii[i, k])
    argmax = np.where(values <= slopes[0], radii[i, 0], argmax)
    argmax = np.where(values >= slopes[-1], radii[i, -1], argmax)
    result = argmax * values - potential(solution, i, argmax)
    return float(result[0]) if np.ndim(s) == 0 else result


def _feasibility_axis(d: int) -> int:
    return int(np.clip(round(FEASIBILITY_GRID_SIZE ** (1 / d)), 5, 64))


def feasibility_violation(solution: RadialSolution) -> float:
    d = solution.dim
    g = _feasibility_axis(d)
    total = np.zeros([g] * d)
    product = np.ones([g] * d)
    for i in range(d):
        axis = np.linspace(solution.radii[i, 0], solution.radii[i, -1], g)
        shape = [g if j == i else 1 for j in range(d)]
        total = total + np.asarray(potential(solution, i, axis)).reshape(shape)
        product = product * axis.reshape(shape)
    return float(max(0.0, -(total - product).min()))


##
# Sampling
##


def _draw_radii(solution: RadialSolution, n: int, gen: np.random.Generator) -> np.ndarray:
    """
    ``(n, d)`` comonotone radii, redrawing rows with a radius below ``MIN_RADIUS``.
    """
    u_grid, radii = solution.u_grid, solution.radii
    u = gen.random(n)
    r1 = interpolate_left(u_grid, radii[0], u)
    result = np.stack([r1] + [H(r1) for H in solution.maps], axis=1).reshape(n, -1)
    while True:
        bad = np.flatnonzero(np.any(result < MIN_RADIUS, axis=1))
        if bad.shape[0] == 0:
            return result
        u = gen.random(bad.shape[0])
        r1 = interpolate_left(u_grid, radii[0], u)
        result[bad] = np.stack([r1] + [H(r1) for H in solution.maps], axis=1)


def _frame_units(d: int, n: int, gen: np.random.Generator) -> np.ndarray:
    """
    ``(n, d - 1, d)`` orthonormal families: a uniform direction followed by
    uniform points on the successive sub-spheres.
    """
    units = np.zeros((n, d - 1, d))
    units[:, 0] = uniform_directions(n, d, gen)
    for i in range(1, d - 1):
        units[:, i] = sample_subsphere_batch(units[:, :i], np.ones(n), gen)
    return units


def _close(units: np.ndarray, radii: np.ndarray, signs) -> np.ndarray:
    """
    Append the oriented wedge of the unit family and scale by the radii.
    """
    last = batch_wedge(units) * np.reshape(signs, (-1, 1))
    return np.concatenate([units, last[:, None, :]], axis=1) * radii[:, :, None]


def _chunked(dim: int, n: int, rng: RngState, chunk) -> np.ndarray:
    seq = as_seed_sequence(rng)
    if n == 0:
        return np.zeros((0, dim, dim))
    return np.concatenate(map_chunks(lambda k, size: chunk(seq, k, size), n))


def sample_coupling(sampler: CouplingSampler, n: int, rng: RngState) -> np.ndarray:
    """
    ``n`` i.i.d. tuples ``(n, d, d)`` of the optimal radial coupling.

    ``x_1`` has radius ``Q_1(u)`` and a uniform direction, ``x_i`` is uniform on
    the sphere of radius ``H_i(|x_1|)`` orthogonal to the previous points, and
    ``x_d`` closes the frame with the wedge of the unit vectors, so
    ``det = orientation · ∏ H_i(|x_1|)``.
    """
    solution = sampler.solution
    d = solution.dim

    def chunk(seq, k, size):
        gen = generator(child_sequence(seq, k, 0))
        radii = _draw_radii(solution, size, gen)
        return _close(_frame_units(d, size, gen), radii, sampler.orientation)

    return _chunked(d, n, rng, chunk)


def sample_absdet_mixture(
    sampler: CouplingSampler, p: float, n: int, rng: RngState
) -> np.ndarray:
    """
    Closes each tuple with the ``+`` wedge with probability ``p`` and the
    ``−`` wedge otherwise, relative to the sampler's orientation. The
    geometry uses the same streams as :func:`sample_coupling`, so ``p = 1``
    reproduces it exactly.
    """
    solution = sampler.solution
    d = solution.dim
    if d != 3:
        raise ContractViolation(f"The mixture sampler needs d = 3, got {d}")
    if not 0 <= p <= 1:
        raise ContractViolation(f"Mixture weight must be in [0, 1], got {p}")

    def chunk(seq, k, size):
        gen = generator(child_sequence(seq, k, 0))
        coins = generator(child_sequence(seq, k, 1))
        radii = _draw_radii(solution, size, gen)
        units = _frame_units(d, size, gen)
        signs = np.where(coins.random(size) < p, 1.0, -1.0) * sampler.orientation
        return _close(units, radii, signs)

    return _chunked(d, n, rng, chunk)


def _check_unit(e: object) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.shape != (3,) or not np.all(np.isfinite(e)):
        raise ContractViolation(f"Expected a unit vector in R^3, got shape {e.shape}")
    if abs(np.linalg.norm(e) - 1) > 1e-12:
        raise ContractViolation(f"Expected a unit vector, got norm {np.linalg.norm(e)!r}")
    return e


def perturbed_circle(
    normals: np.ndarray,
    e: object,
    rng: np.random.Generator,
    density: Density = "direction",
) -> Tuple[np.ndarray, int]:
    """
    For each unit ``normals[j]`` in R^3, a unit ``y ⊥ normals[j]`` drawn with
    density ``ρ`` against normalized arc length, by rejection under the
    envelope 2. Returns the points and the number of proposals.

    ``density="direction"``: ``ρ = 1 + ⟨y, e⟩``.
    ``density="frame"``: ``ρ = 1 + ⟨x, e⟩⟨y, e⟩`` with ``x = normals[j]``.
    """
    e = _check_unit(e)
    if density not in ("direction", "frame"):
        raise ContractViolation(f"Unknown density {density!r}")
    n = normals.shape[0]
    points = np.zeros((n, 3))
    pending = np.arange(n)
    proposals = 0
    while pending.shape[0]:
        m = pending.shape[0]
        proposals += m
        y = sample_subsphere_batch(normals[pending][:, None, :], np.ones(m), rng)
        weight = y @ e
        if density == "frame":
            weight = weight * (normals[pending] @ e)
        accepted = rng.random(m) * 2 < 1 + weight
        points[pending[accepted]] = y[accepted]
        pending = pending[~accepted]
    if n:
        log.debug("perturbed circle acceptance rate %.4f", n / proposals)
    return points, proposals


def sample_coupling_perturbed(
    sampler: CouplingSampler,
    e: object,
    n: int,
    rng: RngState,
    density: Density = "direction",
) -> np.ndarray:
    """
    Like :func:`sample_coupling` in R^3, with ``x_2`` drawn on its circle from
    the perturbed density of :func:`perturbed_circle`. Tuples stay on the
    optimal support.
    """
    solution = sampler.solution
    if solution.dim != 3:
        raise ContractViolation(f"The perturbed sampler needs d = 3, got {solution.dim}")
    e = _check_unit(e)
    if density not in ("direction", "frame"):
        raise ContractViolation(f"Unknown density {density!r}")

    def chunk(seq, k, size):
        gen = generator(child_sequence(seq, k, 0))
        rejection = generator(child_sequence(seq, k, 1))
        radii = _draw_radii(solution, size, gen)
        units = np.zeros((size, 2, 3))
        units[:, 0] = uniform_directions(size, 3, gen)
        units[:, 1], _ = perturbed_circle(units[:, 0], e, rejection, density)
        return _close(units, radii, sampler.orientation)

    return _chunked(3, n, rng, chunk)


##
# Explicit constructions
##


def monge_maps_4d(x: object) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Three linear isometries of R^4 that send every ``x`` to an orthogonal
    frame ``(x, T_2 x, T_3 x, T_4 x)`` with determinant ``|x|^4``. Works on
    the last axis.

    >>> np.array_equal(np.stack(monge_maps_4d([1.0, 0.0, 0.0, 0.0])), np.eye(4)[1:])
    True
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != 4:
        raise ContractViolation(f"Expected points in R^4, got shape {x.shape}")
    x1, x2, x3, x4 = (x[..., j] for j in range(4))
    t2 = np.stack([-x2, x1, -x4, x3], axis=-1)
    t3 = np.stack([-x3, x4, x1, -x2], axis=-1)
    t4 = np.stack([-x4, -x3, x2, x1], axis=-1)
    return t2, t3, t4


def uniform_ball_points(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    ``n`` uniform points in the unit ball of R^d.
    """
    return uniform_directions(n, d, rng) * (rng.random(n) ** (1 / d))[:, None]


def summarize_samples(
    tuples: np.ndarray, value_closed_form: float, seed: Optional[int] = None
) -> Dict[str, object]:
    """
    Empirical mean determinant of sampled tuples next to the closed form.
    """
    n = tuples.shape[0]
    dets = batch_det(tuples) if n else np.zeros(0)
    return {
        "value_closed_form": value_closed_form,
        "value_empirical": float(dets.mean()) if n else float("nan"),
        "stderr": float(dets.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan"),
        "n": n,
        "seed": seed,
    }
