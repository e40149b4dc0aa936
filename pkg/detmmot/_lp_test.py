from __future__ import annotations

import numpy as np
import pytest

from . import Coupling, DiscreteMeasure, PotentialSet, RadialMeasure, SolveReport
from ._errors import ContractViolation, InternalInconsistencyError, ResourceGuardError
from ._lp import (
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


def _gaussian_marginals(seed: int, sizes, d: int):
    rng = np.random.default_rng(seed)
    return tuple(
        DiscreteMeasure(rng.standard_normal((n, d)), rng.dirichlet(np.ones(n))) for n in sizes
    )


@pytest.fixture(scope="module")
def instance3():
    return _gaussian_marginals(21, (4, 3, 5), 3)


@pytest.fixture(scope="module")
def report3(instance3):
    return solve_primal(instance3)


def test_pairs_matching_orientation():
    mu1 = DiscreteMeasure.uniform([[1.0, 0.0], [0.0, 1.0]])
    mu2 = DiscreteMeasure.uniform([[0.0, 1.0], [-1.0, 0.0]])
    report = solve_primal([mu1, mu2])
    assert report.primal_value == pytest.approx(1.0)
    np.testing.assert_allclose(report.plan.mass, np.eye(2) / 2, atol=1e-12)
    assert is_certified(report)


def test_dirac_marginals():
    report = solve_primal([DiscreteMeasure.dirac(row) for row in np.diag([1.0, 2.0, 3.0])])
    assert report.primal_value == pytest.approx(6.0)
    assert report.gap == pytest.approx(0.0, abs=1e-12)


def test_report_is_certified(report3, instance3):
    assert duality_gap(report3) <= 1e-9 * (1 + abs(report3.primal_value))
    cost = objective_tensor(instance3)
    slack, _ = feasibility_slack(report3.potentials, cost)
    assert slack >= -1e-9
    assert dual_value(report3.potentials, instance3) == pytest.approx(report3.dual_value)
    assert abs(report3.primal_value) <= integrability_constant(instance3) + 1e-12


def test_plan_marginals(report3, instance3):
    for i, mu in enumerate(instance3):
        axes = tuple(j for j in range(3) if j != i)
        np.testing.assert_allclose(report3.plan.mass.sum(axis=axes), mu.weights, atol=1e-12)


def test_normalized_potentials(report3):
    for table in report3.potentials.tables[:-1]:
        assert table.min() == pytest.approx(0.0, abs=1e-15)


def test_duality_gap_rejects_negative(report3):
    broken = SolveReport(
        primal_value=1.0,
        dual_value=0.5,
        gap=-0.5,
        plan=report3.plan,
        potentials=report3.potentials,
        pivots=0,
    )
    with pytest.raises(InternalInconsistencyError):
        duality_gap(broken)


def test_plane_inner_product_matches_det():
    mu1, mu2 = _gaussian_marginals(4, (5, 6), 2)
    np.testing.assert_allclose(inner_product_tensor(mu1, mu2), objective_tensor([mu1, mu2]))


def test_inner_product_needs_plane(instance3):
    with pytest.raises(ContractViolation):
        inner_product_tensor(instance3[0], instance3[1])


def test_young_objectives(instance3, report3):
    h0 = young_tensor(instance3)
    det = objective_tensor(instance3)
    assert objective_tensor(instance3, "det_plus_h0").min() >= -1e-12
    assert objective_tensor(instance3, "det_minus_h0").max() <= 1e-12
    np.testing.assert_allclose(objective_tensor(instance3, "det_plus_h0"), det + h0)
    # H_0 integrates to the same constant under every plan
    shifted = solve_primal(instance3, "det_plus_h0")
    assert shifted.primal_value == pytest.approx(
        report3.primal_value + integrability_constant(instance3), abs=1e-9
    )


def test_absdet_dominates(instance3, report3):
    absdet = solve_primal(instance3, "absdet")
    assert absdet.primal_value >= report3.primal_value - 1e-12
    assert absdet.objective == "absdet"


@pytest.mark.parametrize(
    "exponents",
    [
        pytest.param([2.0, 2.0, 2.0], id="sum above one"),
        pytest.param([3.0, 3.0], id="wrong count"),
        pytest.param([1.0, np.inf, np.inf], id="not above one"),
    ],
)
def test_young_exponents_rejects(exponents):
    with pytest.raises(ContractViolation):
        young_exponents(3, exponents)


def test_young_exponents_default():
    np.testing.assert_array_equal(young_exponents(4), [4.0] * 4)
    np.testing.assert_array_equal(young_exponents(3, [2.0, 4.0, 4.0]), [2.0, 4.0, 4.0])


def test_objective_tensor_rejects(instance3):
    with pytest.raises(ContractViolation):
        objective_tensor(instance3, "trace")
    with pytest.raises(ContractViolation):
        objective_tensor(instance3[:2])
    with pytest.raises(ResourceGuardError):
        objective_tensor(instance3, max_entries=59)


def test_convexify(report3, instance3):
    cost = objective_tensor(instance3)
    # a feasible but loose starting point
    loose = PotentialSet(tuple(t + 1.0 for t in report3.potentials.tables))
    once = convexify(loose, instance3, cost=cost)
    slack, _ = feasibility_slack(once, cost)
    assert slack >= -1e-12
    assert dual_value(once, instance3) <= dual_value(loose, instance3) + 1e-12
    twice = convexify(once, instance3, cost=cost)
    for a, b in zip(once.tables, twice.tables):
        np.testing.assert_allclose(a, b, atol=1e-12)
    assert potential_bounds(normalize(once), cost) <= 1e-12


def test_convexify_infeasible_start(instance3):
    cost = objective_tensor(instance3)
    zeros = PotentialSet(tuple(np.zeros(mu.n) for mu in instance3))
    result = convexify(zeros, instance3, sweep_order=[2, 0, 1])
    assert feasibility_slack(result, cost)[0] >= -1e-12


def test_convexify_rejects_order(report3, instance3):
    with pytest.raises(ContractViolation):
        convexify(report3.potentials, instance3, sweep_order=[0, 0, 1])


def test_normalize_keeps_dual_value(instance3):
    rng = np.random.default_rng(5)
    potentials = PotentialSet(tuple(rng.standard_normal(mu.n) for mu in instance3))
    normalized = normalize(potentials)
    assert dual_value(normalized, instance3) == pytest.approx(dual_value(potentials, instance3))
    np.testing.assert_allclose(normalized.total(), potentials.total())


def test_product_coupling(instance3):
    plan = Coupling.product(instance3)
    assert plan.mass.sum() == pytest.approx(1.0)
    assert plan.support().shape == (60, 3)


@pytest.mark.parametrize("d, n_dirs", [(2, 8), (3, 6), (3, 14), (4, 3)])
def test_design_directions(d, n_dirs):
    directions = design_directions(d, n_dirs, np.random.default_rng(0))
    assert directions.shape == (n_dirs, d)
    np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1)


def test_design_directions_are_frames():
    directions = design_directions(3, 12, np.random.default_rng(1))
    frames = directions.reshape(2, 3, 2, 3)
    # each column comes with its antipode
    np.testing.assert_allclose(frames[:, :, 0], -frames[:, :, 1])
    for frame in frames[:, :, 0]:
        np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("scheme", ["design", "uniform"])
def test_discretize_radial_instance(scheme):
    marginals = [RadialMeasure.uniform_ball(3)] * 3
    discrete = discretize_radial_instance(marginals, 2, 6, 0, scheme=scheme)
    assert len(discrete) == 3
    for mu in discrete:
        assert mu.n == 12
        radii = np.unique(np.round(np.linalg.norm(mu.atoms, axis=1), 12))
        np.testing.assert_allclose(radii, [0.25 ** (1 / 3), 0.75 ** (1 / 3)], rtol=1e-5)


def test_discretize_radial_instance_rejects():
    ball = [RadialMeasure.uniform_ball(3)] * 3
    with pytest.raises(ContractViolation):
        discretize_radial_instance(ball, 2, 6, 0, scheme="lattice")
    with pytest.raises(ResourceGuardError):
        discretize_radial_instance(ball, 10, 20, 0)


def test_two_atoms_against_a_symmetric_pair():
    mu1 = DiscreteMeasure(np.array([[1.0, 0.0], [2.0, 0.0]]), np.array([0.5, 0.5]))
    mu2 = DiscreteMeasure(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([0.5, 0.5]))
    report = solve_primal([mu1, mu2])
    assert report.primal_value == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(report.plan.mass, [[0.0, 0.5], [0.5, 0.0]], atol=1e-12)


def test_forced_product_plan():
    mu1 = DiscreteMeasure.dirac(np.array([1.0, 0.0]))
    mu2 = DiscreteMeasure(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([0.5, 0.5]))
    assert solve_primal([mu1, mu2]).primal_value == pytest.approx(0.0, abs=1e-12)
    assert solve_primal([mu1, mu2], "absdet").primal_value == pytest.approx(1.0, abs=1e-12)


def test_plan_is_a_vertex(report3, instance3):
    nonzeros = np.count_nonzero(report3.plan.mass > 0)
    assert nonzeros <= sum(mu.n for mu in instance3) - len(instance3) + 1


def test_permuting_marginals(report3, instance3):
    cyclic = instance3[1:] + instance3[:1]
    assert solve_primal(cyclic).primal_value == pytest.approx(report3.primal_value, abs=1e-9)
    # a transposition flips the sign of det
    swapped = (instance3[1], instance3[0], instance3[2])
    _, _, value, _ = solve_cost_tensor(
        -objective_tensor(swapped), [mu.weights for mu in swapped]
    )
    assert value == pytest.approx(report3.primal_value, abs=1e-9)


def test_permuting_atoms(report3, instance3):
    mu = instance3[2]
    order = np.random.default_rng(4).permutation(mu.n)
    shuffled = (instance3[0], instance3[1], DiscreteMeasure(mu.atoms[order], mu.weights[order]))
    assert solve_primal(shuffled).primal_value == pytest.approx(report3.primal_value, abs=1e-9)
