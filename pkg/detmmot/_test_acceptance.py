"""
End-to-end checks of the radial closed form, the exact LP and the
Monte-Carlo diagnostics against known values.
"""

from __future__ import annotations

import numpy as np
import pytest

from . import Coupling, CouplingSampler, DiscreteMeasure, RadialMeasure
from ._cli import RunConfig, cmd_compare
from ._json_data import read_json
from ._linalg import batch_det
from ._lp import (
    MAX_ENTRIES,
    convexify,
    discretize_radial_instance,
    dual_value,
    inner_product_tensor,
    objective_tensor,
    solve_cost_tensor,
    solve_primal,
)
from ._optcheck import (
    FUBINI_CATALOG,
    check_gradient_system_3d,
    check_subgradient,
    check_tightness,
    fubini_sphere_test,
    marginal_stat_test,
    sign_audit,
)
from ._radial import (
    monge_maps_4d,
    sample_absdet_mixture,
    sample_coupling,
    sample_coupling_perturbed,
    solve_radial,
    uniform_ball_points,
)

BALL = RadialMeasure.uniform_ball(3)
E3 = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def ball3():
    return solve_radial([BALL] * 3)


@pytest.fixture(scope="module")
def coupling_samples(ball3):
    return sample_coupling(CouplingSampler(ball3), 100_000, 2024)


def test_ball_closed_form():
    fine = RadialMeasure.uniform_ball(3, n_knots=4096)
    assert solve_radial([fine] * 3).value == pytest.approx(0.5, abs=1e-6)


@pytest.mark.slow
def test_ball_empirical_value(ball3):
    dets = batch_det(sample_coupling(CouplingSampler(ball3), 1_000_000, 1))
    assert abs(dets.mean() - 0.5) <= 0.005


def test_support_law(coupling_samples):
    norms = np.linalg.norm(coupling_samples, axis=2)
    gram = np.einsum("nid,njd->nij", coupling_samples, coupling_samples)
    off = gram.copy()
    off[:, np.arange(3), np.arange(3)] = 0
    assert np.abs(off).max() <= 1e-8
    np.testing.assert_allclose(norms[:, 1:], norms[:, :1].repeat(2, axis=1), atol=1e-8)
    dets = batch_det(coupling_samples)
    assert dets.min() >= -1e-12
    np.testing.assert_allclose(dets, norms.prod(axis=1), atol=1e-8)


@pytest.mark.parametrize("i", [0, 1, 2])
def test_coupling_marginals(coupling_samples, i):
    report = marginal_stat_test(coupling_samples[:, i], BALL)
    assert report.passed, report


def _gaussian_instance(seed: int):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    high = 21 if d == 2 else 11
    return tuple(
        DiscreteMeasure(rng.standard_normal((n, d)), rng.dirichlet(np.ones(n)))
        for n in rng.integers(2, high, size=d)
    )


@pytest.mark.parametrize("seed", range(20))
def test_strong_duality(seed):
    marginals = _gaussian_instance(seed)
    report = solve_primal(marginals)
    assert report.gap <= 1e-9 * max(1.0, abs(report.primal_value))
    cost = objective_tensor(marginals)
    certified = convexify(report.potentials, marginals, cost=cost)
    assert dual_value(certified, marginals, cost) >= report.primal_value - 1e-9


def _compare(out, n_radii, n_dirs, scheme, max_entries=MAX_ENTRIES):
    config = RunConfig(
        command="compare",
        out=out / f"{scheme}-{n_radii}x{n_dirs}.json",
        max_entries=max_entries,
        options={
            "uniform_ball": True,
            "dim": 3,
            "n_radii": n_radii,
            "n_dirs": n_dirs,
            "scheme": scheme,
        },
    )
    assert cmd_compare(config) == 0
    return read_json(config.out)


@pytest.mark.slow
def test_compare_design_near_radial_value(tmp_path):
    comparison = _compare(tmp_path, 6, 12, "design")
    assert comparison["relative_deviation"] <= 0.1
    assert comparison["gap"] <= 1e-9 * (1 + comparison["value_lp"])


@pytest.mark.slow
def test_compare_refinement_reduces_deviation(tmp_path):
    # the design scheme is exact on whole cross-polytopes, so refine uniform draws
    coarse = _compare(tmp_path, 6, 12, "uniform")
    fine = _compare(tmp_path, 8, 20, "uniform", max_entries=160 ** 3)
    assert fine["relative_deviation"] < coarse["relative_deviation"]


def test_refinement_reduces_deviation(ball3):
    def deviation(n_dirs):
        marginals = discretize_radial_instance([BALL] * 3, 2, n_dirs, 3, scheme="uniform")
        return abs(solve_primal(marginals).primal_value - ball3.value)

    assert deviation(24) < deviation(3)


def test_product_objective_is_comonotone():
    rng = np.random.default_rng(12)
    radii = rng.uniform(0.5, 2.0, size=(3, 10))
    cost = np.einsum("i,j,k->ijk", *radii)
    mass, _, _, _ = solve_cost_tensor(cost, [np.full(10, 0.1)] * 3)
    support = {tuple(index) for index in np.argwhere(mass > 1e-12)}
    order = np.argsort(radii, axis=1)
    assert support == {tuple(order[:, k]) for k in range(10)}
    np.testing.assert_allclose(mass[tuple(order)], 0.1, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_plane_det_matches_rotated_inner_product(seed):
    rng = np.random.default_rng(100 + seed)
    mu1, mu2 = (
        DiscreteMeasure(rng.standard_normal((n, 2)), rng.dirichlet(np.ones(n)))
        for n in rng.integers(2, 15, size=2)
    )
    det_value = solve_primal([mu1, mu2]).primal_value
    _, _, inner_value, _ = solve_cost_tensor(
        inner_product_tensor(mu1, mu2), [mu1.weights, mu2.weights]
    )
    assert det_value == pytest.approx(inner_value, abs=1e-10)


def _symmetric(rng: np.random.Generator, n: int, d: int) -> DiscreteMeasure:
    half = rng.standard_normal((n, d))
    weights = rng.dirichlet(np.ones(n)) / 2
    return DiscreteMeasure(np.vstack([half, -half]), np.concatenate([weights, weights]))


@pytest.mark.parametrize("seed", range(10))
def test_symmetric_marginals_align_orientation(seed):
    rng = np.random.default_rng(200 + seed)
    d = 2 + seed % 2
    marginals = [_symmetric(rng, 3, d), _symmetric(rng, 3, d)]
    if d == 3:
        marginals.append(DiscreteMeasure(rng.standard_normal((5, 3)), rng.dirichlet(np.ones(5))))
    report = solve_primal(marginals)
    absdet = solve_primal(marginals, "absdet")
    assert report.primal_value == pytest.approx(absdet.primal_value, abs=1e-9)
    assert sign_audit(report.plan) < 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("density", ["direction", "frame"])
def test_perturbed_value(ball3, density):
    tuples = sample_coupling_perturbed(CouplingSampler(ball3), E3, 1_000_000, 5, density)
    assert abs(batch_det(tuples).mean() - 0.5) <= 0.005


@pytest.mark.slow
def test_mixture_value(ball3):
    tuples = sample_absdet_mixture(CouplingSampler(ball3), 0.5, 1_000_000, 6)
    assert abs(np.abs(batch_det(tuples)).mean() - 0.5) <= 0.005


def test_perturbed_marginals(ball3):
    tuples = sample_coupling_perturbed(CouplingSampler(ball3), E3, 100_000, 7, "frame")
    for i in range(3):
        assert marginal_stat_test(tuples[:, i], BALL).passed
    assert check_gradient_system_3d(tuples[:2000], ball3).passed


def test_mixture_marginals(ball3):
    tuples = sample_absdet_mixture(CouplingSampler(ball3), 0.5, 100_000, 8)
    for i in range(3):
        assert marginal_stat_test(tuples[:, i], BALL).passed


def test_monge_maps_4d():
    x = uniform_ball_points(100_000, 4, np.random.default_rng(9))
    images = monge_maps_4d(x)
    frames = np.stack([x, *images], axis=1)
    norms = np.linalg.norm(x, axis=1)
    gram = np.einsum("nid,njd->nij", frames, frames)
    np.testing.assert_allclose(gram, norms[:, None, None] ** 2 * np.eye(4), atol=1e-12)
    dets = batch_det(frames[:10_000])
    np.testing.assert_allclose(dets, norms[:10_000] ** 4, rtol=1e-10)
    ball4 = RadialMeasure.uniform_ball(4)
    for image in images:
        assert marginal_stat_test(image, ball4).passed


@pytest.mark.slow
@pytest.mark.parametrize("f", list(FUBINI_CATALOG))
@pytest.mark.parametrize("k", [2, 3])
def test_fubini_at_scale(k, f):
    assert fubini_sphere_test(k, f, 1_000_000, 11).passed


def test_certificates_on_the_optimal_coupling(ball3, coupling_samples):
    tuples = coupling_samples[:10_000]
    assert check_tightness(tuples, ball3).passed
    assert check_subgradient(tuples, ball3).passed
    assert check_gradient_system_3d(tuples, ball3).passed


def test_certificates_reject_independent_tuples(ball3):
    rng = np.random.default_rng(13)
    tuples = np.stack([uniform_ball_points(10_000, 3, rng) for _ in range(3)], axis=1)
    certificate = check_tightness(tuples, ball3)
    assert not certificate.passed
    assert certificate.max_tightness_gap > 0.1


def test_product_coupling_is_not_optimal():
    marginals = [RadialMeasure.uniform_ball(2)] * 2
    discrete = discretize_radial_instance(marginals, 2, 4, 0)
    report = solve_primal(discrete)
    plan = Coupling.product(discrete)
    product_value = float((plan.mass * objective_tensor(discrete)).sum())
    assert product_value < report.primal_value - 0.1
