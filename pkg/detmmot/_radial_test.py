from __future__ import annotations

import numpy as np
import pytest

from . import CouplingSampler, DiscreteMeasure, RadialMeasure
from ._errors import AtomicMarginalError, ContractViolation
from ._linalg import batch_det, uniform_directions
from ._radial import (
    conjugate,
    monge_maps_4d,
    perturbed_circle,
    potential,
    sample_absdet_mixture,
    sample_coupling,
    sample_coupling_perturbed,
    slope,
    solve_radial,
    summarize_samples,
    uniform_ball_points,
)
from ._random import THREADS_ENV


@pytest.fixture(scope="module")
def ball3():
    return solve_radial([RadialMeasure.uniform_ball(3)] * 3)


@pytest.fixture(scope="module")
def intervals():
    return solve_radial([RadialMeasure.uniform_interval(0, 1)] * 2)


@pytest.fixture(scope="module")
def shifted():
    return solve_radial(
        [RadialMeasure.uniform_interval(0, 1), RadialMeasure.uniform_interval(1, 2)]
    )


def test_uniform_ball_value(ball3):
    assert ball3.value == pytest.approx(0.5, abs=1e-5)


def test_uniform_intervals(intervals):
    assert intervals.value == pytest.approx(1 / 3, rel=1e-7)
    for i in range(2):
        assert potential(intervals, i, 0.5) == pytest.approx(0.125, abs=1e-14)
        assert slope(intervals, i, 0.5) == pytest.approx(0.5, abs=1e-14)
        assert conjugate(intervals, i, 0.5) == pytest.approx(0.125, abs=1e-12)


def test_shifted_intervals(shifted):
    assert shifted.value == pytest.approx(5 / 6, rel=1e-7)
    r = np.linspace(0, 1, 11)
    np.testing.assert_allclose(potential(shifted, 0, r), r + r ** 2 / 2, atol=1e-13)
    np.testing.assert_allclose(potential(shifted, 1, 1 + r), r ** 2 / 2, atol=1e-13)
    # tight along the comonotone graph
    assert shifted.graph_tightness_gap() < 1e-12
    assert shifted.feasibility_violation() < 1e-12


def test_uniform_ball_potentials(ball3):
    r = np.array([0.1, 0.5, 0.9])
    for i in range(3):
        np.testing.assert_allclose(potential(ball3, i, r), r ** 3 / 3, atol=1e-12)
        np.testing.assert_allclose(ball3.slope(i, r), r ** 2, atol=1e-12)
    assert ball3.is_convex
    assert ball3.feasibility_violation() < 1e-8
    assert ball3.graph_tightness_gap() < 1e-12


def test_potential_extends_linearly(ball3):
    # value 1/3 and slope 1 at the end of the support
    assert potential(ball3, 0, 1.5) == pytest.approx(1 / 3 + 0.5, abs=1e-12)


def test_conjugate(ball3):
    s = np.array([0.04, 0.25, 0.81])
    np.testing.assert_allclose(ball3.conjugate(2, s), 2 / 3 * s ** 1.5, rtol=1e-9)


def test_solve_radial_rejects_atoms():
    atoms = DiscreteMeasure(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.5, 0.5]))
    with pytest.raises(AtomicMarginalError):
        solve_radial([atoms.radial_projection(), RadialMeasure.uniform_interval(0, 1)])


def test_solve_radial_rejects_one_marginal():
    with pytest.raises(ContractViolation):
        solve_radial([RadialMeasure.uniform_interval(0, 1)])


def test_potential_index(ball3):
    with pytest.raises(ContractViolation):
        potential(ball3, 3, 0.5)


def _check_support(tuples: np.ndarray, radii_of_first):
    n, d, _ = tuples.shape
    norms = np.linalg.norm(tuples, axis=2)
    units = tuples / norms[:, :, None]
    gram = np.einsum("nid,njd->nij", units, units)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(d), gram.shape), atol=1e-9)
    for i in range(1, d):
        np.testing.assert_allclose(norms[:, i], radii_of_first[i - 1](norms[:, 0]), rtol=1e-9)
    return norms


def test_sample_coupling_on_support(ball3):
    tuples = sample_coupling(CouplingSampler(ball3), 2000, 5)
    assert tuples.shape == (2000, 3, 3)
    norms = _check_support(tuples, ball3.maps)
    np.testing.assert_allclose(batch_det(tuples), np.prod(norms, axis=1), rtol=1e-9)


def test_sample_coupling_plane(shifted):
    tuples = sample_coupling(CouplingSampler(shifted), 500, 11)
    norms = _check_support(tuples, shifted.maps)
    np.testing.assert_allclose(norms[:, 1], norms[:, 0] + 1, rtol=1e-9)
    assert np.all(batch_det(tuples) > 0)


def test_sample_coupling_orientation(ball3):
    tuples = sample_coupling(CouplingSampler(ball3, orientation=-1), 500, 5)
    assert np.all(batch_det(tuples) < 0)


def test_sample_coupling_mean(ball3):
    summary = summarize_samples(sample_coupling(CouplingSampler(ball3), 20_000, 3), 0.5, 3)
    assert abs(summary["value_empirical"] - 0.5) < 5 * summary["stderr"]
    assert summary["n"] == 20_000 and summary["seed"] == 3


def test_sample_coupling_zero(ball3):
    assert sample_coupling(CouplingSampler(ball3), 0, 1).shape == (0, 3, 3)


def test_sample_coupling_seeded(ball3):
    sampler = CouplingSampler(ball3)
    first = sample_coupling(sampler, 100, 42)
    np.testing.assert_array_equal(first, sample_coupling(sampler, 100, 42))
    assert not np.array_equal(first, sample_coupling(sampler, 100, 43))


def test_sample_coupling_independent_of_threads(ball3, monkeypatch):
    sampler = CouplingSampler(ball3)
    n = (1 << 16) + 100
    monkeypatch.setenv(THREADS_ENV, "1")
    serial = sample_coupling(sampler, n, 9)
    monkeypatch.setenv(THREADS_ENV, "4")
    np.testing.assert_array_equal(serial, sample_coupling(sampler, n, 9))


def test_mixture_extremes(ball3):
    sampler = CouplingSampler(ball3)
    np.testing.assert_array_equal(
        sample_absdet_mixture(sampler, 1.0, 300, 8), sample_coupling(sampler, 300, 8)
    )
    assert np.all(batch_det(sample_absdet_mixture(sampler, 0.0, 300, 8)) < 0)


def test_mixture_half_cancels(ball3):
    tuples = sample_absdet_mixture(CouplingSampler(ball3), 0.5, 20_000, 4)
    summary = summarize_samples(tuples, ball3.value)
    assert abs(summary["value_empirical"]) < 5 * summary["stderr"]
    np.testing.assert_allclose(
        np.abs(batch_det(tuples)), np.prod(np.linalg.norm(tuples, axis=2), axis=1), rtol=1e-9
    )


@pytest.mark.parametrize("p", [-0.1, 1.1])
def test_mixture_rejects_weight(ball3, p):
    with pytest.raises(ContractViolation):
        sample_absdet_mixture(CouplingSampler(ball3), p, 10, 0)


def test_mixture_needs_three_dimensions(intervals):
    with pytest.raises(ContractViolation):
        sample_absdet_mixture(CouplingSampler(intervals), 0.5, 10, 0)


@pytest.mark.parametrize("density", ["direction", "frame"])
def test_perturbed_stays_on_support(ball3, density):
    e = np.array([0.0, 0.0, 1.0])
    tuples = sample_coupling_perturbed(CouplingSampler(ball3), e, 1000, 6, density=density)
    norms = _check_support(tuples, ball3.maps)
    np.testing.assert_allclose(batch_det(tuples), np.prod(norms, axis=1), rtol=1e-9)


def test_perturbed_circle_tilts_towards_e():
    rng = np.random.default_rng(12)
    e = np.array([1.0, 0.0, 0.0])
    # normals orthogonal to e, so every circle passes through ±e
    normals = np.tile([0.0, 0.0, 1.0], (20_000, 1))
    points, proposals = perturbed_circle(normals, e, rng)
    np.testing.assert_allclose(points @ normals[0], 0, atol=1e-12)
    # E⟨y, e⟩ = ½ under the density 1 + ⟨y, e⟩ on a great circle through e
    assert (points @ e).mean() == pytest.approx(0.5, abs=0.02)
    assert proposals >= 20_000


@pytest.mark.parametrize(
    "e",
    [
        pytest.param([0.0, 0.0, 2.0], id="not unit"),
        pytest.param([0.0, 1.0], id="wrong length"),
    ],
)
def test_perturbed_rejects_e(ball3, e):
    with pytest.raises(ContractViolation):
        sample_coupling_perturbed(CouplingSampler(ball3), e, 10, 0)


def test_monge_maps_4d():
    x = uniform_ball_points(1000, 4, np.random.default_rng(2))
    frame = np.stack([x, *monge_maps_4d(x)], axis=1)
    norms = np.linalg.norm(x, axis=1)
    gram = np.einsum("nid,njd->nij", frame, frame)
    np.testing.assert_allclose(
        gram, norms[:, None, None] ** 2 * np.eye(4), atol=1e-14
    )
    np.testing.assert_allclose(batch_det(frame), norms ** 4, rtol=1e-10, atol=1e-15)


def test_uniform_ball_points():
    x = uniform_ball_points(10_000, 3, np.random.default_rng(0))
    radii = np.linalg.norm(x, axis=1)
    assert radii.max() <= 1
    # P(|x| ≤ ½) = 1/8
    assert np.mean(radii <= 0.5) == pytest.approx(0.125, abs=0.015)


@pytest.mark.parametrize("density", ["direction", "frame"])
def test_perturbed_circle_accepts_half(density):
    rng = np.random.default_rng(14)
    normals = uniform_directions(50_000, 3, rng)
    points, proposals = perturbed_circle(normals, np.array([0.6, 0.0, 0.8]), rng, density)
    assert 50_000 / proposals == pytest.approx(0.5, abs=0.01)
