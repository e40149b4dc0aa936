from __future__ import annotations

import numpy as np
import pytest

from . import Coupling, CouplingSampler, DiscreteMeasure, PotentialSet, RadialMeasure
from ._errors import ContractViolation
from ._linalg import uniform_directions
from ._lp import solve_primal
from ._optcheck import (
    FUBINI_CATALOG,
    check_gradient_system_3d,
    check_subgradient,
    check_tightness,
    fubini_sphere_test,
    hadamard_young_bound,
    marginal_stat_test,
    sign_audit,
)
from ._radial import sample_coupling, sample_coupling_perturbed, solve_radial, uniform_ball_points


@pytest.fixture(scope="module")
def ball3():
    return solve_radial([RadialMeasure.uniform_ball(3)] * 3)


@pytest.fixture(scope="module")
def samples(ball3):
    return sample_coupling(CouplingSampler(ball3), 5000, 31)


@pytest.fixture(scope="module")
def report():
    rng = np.random.default_rng(8)
    marginals = [DiscreteMeasure.uniform(rng.standard_normal((4, 3))) for _ in range(3)]
    return solve_primal(marginals)


def test_radial_tightness(ball3, samples):
    certificate = check_tightness(samples, ball3)
    assert certificate.passed
    assert certificate.max_tightness_gap < 1e-9
    assert [r.name for r in certificate.details] == ["feasibility", "tightness"]


def test_radial_tightness_off_support(ball3, samples):
    # flipping one point breaks the orientation: det < 0 while the potentials sum to |det|
    flipped = samples.copy()
    flipped[:, 0] *= -1
    certificate = check_tightness(flipped, ball3)
    assert not certificate.passed
    assert certificate.max_tightness_gap > 0.1


def test_radial_subgradient(ball3, samples):
    certificate = check_subgradient(samples, ball3)
    assert certificate.passed, certificate.details
    names = {r.name for r in certificate.details}
    assert "subgradient[0]" in names and "conjugate_identity[2]" in names


def test_gradient_system(ball3, samples):
    certificate = check_gradient_system_3d(samples, ball3)
    assert certificate.passed, certificate.details
    assert certificate.skipped == 0


def test_gradient_system_perturbed(ball3):
    tuples = sample_coupling_perturbed(
        CouplingSampler(ball3), np.array([0.6, 0.0, 0.8]), 2000, 2
    )
    assert check_gradient_system_3d(tuples, ball3).passed


def test_gradient_system_skips_zero_points(ball3, samples):
    tuples = samples[:10].copy()
    tuples[3, 1] = 0
    certificate = check_gradient_system_3d(tuples, ball3)
    assert certificate.skipped == 1


def test_gradient_system_needs_three_dimensions():
    solution = solve_radial([RadialMeasure.uniform_interval(0, 1)] * 2)
    with pytest.raises(ContractViolation):
        check_gradient_system_3d(np.zeros((1, 2, 2)), solution)


def test_radial_shape_mismatch(ball3):
    with pytest.raises(ContractViolation):
        check_tightness(np.zeros((4, 2, 2)), ball3)


def test_discrete_certificates(report):
    tightness = check_tightness(report.plan, report.potentials)
    assert tightness.passed
    assert tightness.max_feasibility_violation <= 1e-9
    assert check_subgradient(report.plan, report.potentials).passed


def test_discrete_infeasible_potentials(report):
    lowered = PotentialSet(tuple(t - 1.0 for t in report.potentials.tables))
    certificate = check_tightness(report.plan, lowered)
    assert not certificate.passed
    assert certificate.max_feasibility_violation == pytest.approx(3.0)


def test_discrete_checks_need_coupling(report):
    with pytest.raises(ContractViolation):
        check_tightness(np.zeros((1, 3, 3)), report.potentials)


def test_sign_audit():
    mu1 = DiscreteMeasure.uniform([[1.0, 0.0], [-1.0, 0.0]])
    mu2 = DiscreteMeasure.uniform([[0.0, 1.0], [0.0, -1.0]])
    assert sign_audit(solve_primal([mu1, mu2]).plan) == 0.0
    assert sign_audit(Coupling.product([mu1, mu2])) == pytest.approx(0.5)


@pytest.mark.parametrize("f", list(FUBINI_CATALOG))
@pytest.mark.parametrize("k", [2, 3])
def test_fubini(k, f):
    estimate = fubini_sphere_test(k, f, 20_000, 99)
    assert estimate.passed
    lhs, rhs, stderr = estimate
    assert stderr >= 0


def test_fubini_constant():
    lhs, rhs, stderr = fubini_sphere_test(2, "const", 100, 0)
    assert (lhs, rhs, stderr) == (1.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "k, f, n",
    [
        pytest.param(1, "const", 100, id="circle"),
        pytest.param(2, "exp", 100, id="unknown function"),
        pytest.param(2, "const", 1, id="one sample"),
    ],
)
def test_fubini_rejects(k, f, n):
    with pytest.raises(ContractViolation):
        fubini_sphere_test(k, f, n, 0)


def test_marginal_stat_test_ball():
    points = uniform_ball_points(20_000, 3, np.random.default_rng(4))
    report = marginal_stat_test(points, RadialMeasure.uniform_ball(3))
    assert report.passed
    assert report.ks_pvalue >= 1e-3


def test_marginal_stat_test_detects_shell():
    points = uniform_ball_points(20_000, 3, np.random.default_rng(4))
    points /= np.linalg.norm(points, axis=1)[:, None]
    assert not marginal_stat_test(points, RadialMeasure.uniform_ball(3)).passed


def test_marginal_stat_test_detects_tilt():
    rng = np.random.default_rng(6)
    points = uniform_ball_points(20_000, 3, rng)
    points[:, 2] = np.abs(points[:, 2])
    report = marginal_stat_test(points, RadialMeasure.uniform_ball(3))
    assert report.mean_direction_norm > report.mean_direction_threshold
    assert not report.passed


def test_marginal_stat_test_needs_samples():
    with pytest.raises(ContractViolation):
        marginal_stat_test(np.zeros((10, 3)), RadialMeasure.uniform_ball(3))


def test_hadamard_young_batch():
    x = np.random.default_rng(2).standard_normal((200, 4, 4))
    dets, prods, h0 = hadamard_young_bound(x)
    assert np.all(np.abs(dets) <= prods + 1e-12)
    assert np.all(prods <= h0 + 1e-12)


def test_hadamard_young_exponents():
    x = np.diag([1.0, 2.0])
    det, prod, h0 = hadamard_young_bound(x, [2.0, 2.0])
    assert (det, prod, h0) == (pytest.approx(2.0), pytest.approx(2.0), pytest.approx(2.5))


def test_subgradient_fails_off_frame(ball3):
    s = 1 / np.sqrt(2)
    tilted = np.array([[[1.0, 0.0, 0.0], [s, s, 0.0], [0.0, 0.0, 1.0]]])
    certificate = check_subgradient(tilted, ball3)
    assert not certificate.passed
    assert certificate.max_subgradient_residual > 0.1


def test_gradient_system_flipped_third_point(ball3):
    flipped = np.diag([1.0, 1.0, -1.0])[None]
    certificate = check_gradient_system_3d(flipped, ball3)
    assert not certificate.passed
    residuals = {r.name: r.residual for r in certificate.details}
    # ∇ψ(y) = e_2 against −x∧z = −e_2
    assert residuals["gradient[1]"] == pytest.approx(2.0, rel=1e-5)


@pytest.mark.parametrize("k", [2, 3])
def test_fubini_poly4_closed_form(k):
    estimate = fubini_sphere_test(k, "poly4", 100_000, 5)
    assert estimate.passed
    assert estimate.lhs == pytest.approx(1 / ((k + 1) * (k + 3)), abs=5 * estimate.stderr)
    assert estimate.rhs == pytest.approx(1 / ((k + 1) * (k + 3)), abs=5 * estimate.stderr)


def test_marginal_stat_test_exact_quantile_draws():
    rng = np.random.default_rng(21)
    ball = RadialMeasure.uniform_ball(3)
    n = 40_000
    points = uniform_directions(n, 3, rng) * ball.sample(n, rng)[:, None]
    report = marginal_stat_test(points, ball)
    assert report.passed
    assert report.ks_statistic <= 1.95 / np.sqrt(n)
