"""
Checks of optimality conditions on sampled supports and solved plans, plus
Monte-Carlo and statistical checks on the sampled laws.
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from . import (
    CertificateReport,
    ConditionRecord,
    Coupling,
    FubiniEstimate,
    HadamardYoung,
    MarginalTestReport,
    PotentialSet,
    RadialMeasure,
    RadialSolution,
)
from ._errors import ContractViolation, InternalInconsistencyError
from ._linalg import (
    batch_det,
    batch_signed_wedge_excluding,
    batch_wedge,
    sample_subsphere_batch,
    uniform_directions,
)
from ._lp import FEASIBILITY_TOL, feasibility_slack, objective_tensor, young_exponents
from ._radial import RADIAL_FEASIBILITY_TOL
from ._random import RngState, as_seed_sequence, child_sequence, generator, map_chunks

__all__ = [
    "TIGHTNESS_TOL",
    "SUBGRADIENT_TOL",
    "GRADIENT_TOL",
    "KS_ALPHA",
    "FUBINI_CATALOG",
    "check_tightness",
    "check_subgradient",
    "check_gradient_system_3d",
    "sign_audit",
    "fubini_sphere_test",
    "marginal_stat_test",
    "hadamard_young_bound",
]

log = logging.getLogger(__name__)

TIGHTNESS_TOL = 1e-6
SUBGRADIENT_TOL = 1e-5
GRADIENT_TOL = 1e-5
KS_ALPHA = 1e-3
MIN_MARGINAL_SAMPLES = 10_000
# standard errors allowed on the second moments of directions
MOMENT_SIGMAS = 5.0
SIGN_TOL = 1e-9
MASS_THRESHOLD = 1e-12

Support = Union[np.ndarray, Coupling]
Potentials = Union[RadialSolution, PotentialSet]


def _record(
    name: str, residuals: np.ndarray, tolerance: float
) -> Tuple[ConditionRecord, float]:
    if residuals.shape[0] == 0:
        return ConditionRecord(name, residual=0.0, tolerance=tolerance, passed=True), 0.0
    worst = int(np.argmax(residuals))
    value = float(residuals[worst])
    return (
        ConditionRecord(
            name,
            residual=value,
            tolerance=tolerance,
            passed=value <= tolerance,
            worst_index=worst,
        ),
        value,
    )


def _radial_support(support: object, solution: RadialSolution) -> np.ndarray:
    tuples = np.asarray(support, dtype=float)
    d = solution.dim
    if tuples.ndim != 3 or tuples.shape[1:] != (d, d):
        raise ContractViolation(
            f"Expected tuples of shape (n, {d}, {d}), got {tuples.shape}"
        )
    return tuples


def _radial_totals(tuples: np.ndarray, solution: RadialSolution) -> np.ndarray:
    norms = np.linalg.norm(tuples, axis=2)
    return np.sum(
        [np.asarray(solution.potential(i, norms[:, i])) for i in range(solution.dim)],
        axis=0,
    ).reshape(-1)


def _discrete_parts(
    plan: Coupling, potentials: PotentialSet, objective: str
) -> Tuple[np.ndarray, np.ndarray]:
    if potentials.shape != plan.mass.shape:
        raise ContractViolation(
            f"Potentials of shape {potentials.shape} for a plan of shape {plan.mass.shape}"
        )
    cost = objective_tensor(plan.marginals, objective)
    return cost, plan.support(MASS_THRESHOLD)


##
# Duality conditions
##


def check_tightness(
    support: Support,
    potentials: Potentials,
    tol: float = TIGHTNESS_TOL,
    objective: str = "det",
) -> CertificateReport:
    """
    Dual feasibility, then the largest ``Σ φ_i(x_i) − H(x)`` over the support.

    Radial potentials take an ``(n, d, d)`` array of tuples; discrete
    potentials take the plan whose positive entries form the support.
    """
    if isinstance(potentials, RadialSolution):
        tuples = _radial_support(support, potentials)
        dets = batch_det(tuples) if tuples.shape[0] else np.zeros(0)
        gaps = _radial_totals(tuples, potentials) - dets if tuples.shape[0] else dets
        feasibility_tol = RADIAL_FEASIBILITY_TOL
        grid = potentials.feasibility_violation()
        feasibility, feasibility_value = _record(
            "feasibility", np.maximum(-gaps, 0.0), feasibility_tol
        )
        if grid > feasibility_value:
            feasibility = ConditionRecord(
                "feasibility", grid, feasibility_tol, grid <= feasibility_tol
            )
            feasibility_value = grid
    elif isinstance(potentials, PotentialSet):
        if not isinstance(support, Coupling):
            raise ContractViolation("Discrete potentials are checked against a Coupling")
        cost, indices = _discrete_parts(support, potentials, objective)
        slack, worst = feasibility_slack(potentials, cost)
        feasibility_tol = FEASIBILITY_TOL
        feasibility_value = max(0.0, -slack)
        feasibility = ConditionRecord(
            "feasibility",
            feasibility_value,
            feasibility_tol,
            feasibility_value <= feasibility_tol,
            worst_index=int(np.ravel_multi_index(worst, cost.shape)),
        )
        totals = potentials.total()
        gaps = np.array([totals[tuple(j)] - cost[tuple(j)] for j in indices])
    else:
        raise ContractViolation(f"Unsupported potentials {type(potentials)}")

    tightness, tightness_value = _record("tightness", np.abs(gaps), tol)
    if not feasibility.passed:
        log.warning("potentials are infeasible by %.3g", feasibility_value)
    return CertificateReport.from_records(
        [feasibility, tightness],
        feasibility=feasibility_value,
        tightness=tightness_value,
    )


def check_subgradient(
    support: Support,
    potentials: Potentials,
    tol: float = SUBGRADIENT_TOL,
    objective: str = "det",
) -> CertificateReport:
    """
    For every tuple and every ``i``, with ``w`` the signed wedge of the other
    points, the Fenchel equality ``φ_i(x_i) + φ_i*(w) = ⟨x_i, w⟩`` and the
    identity ``Σ_{j≠i} φ_j(x_j) = φ_i*(w)``, both relative to ``1 + |value|``.

    The conjugate runs over the tabulated support for radial potentials and
    over the marginal's atoms for discrete ones.
    """
    records: List[ConditionRecord] = []
    worst = 0.0
    if isinstance(potentials, RadialSolution):
        if not potentials.is_convex:
            raise ContractViolation("Radial potentials are not convex")
        tuples = _radial_support(support, potentials)
        d = potentials.dim
        norms = np.linalg.norm(tuples, axis=2)
        values = np.stack(
            [np.asarray(potentials.potential(i, norms[:, i])) for i in range(d)], axis=1
        ).reshape(-1, d)
        for i in range(d):
            w = batch_signed_wedge_excluding(tuples, i) if tuples.shape[0] else np.zeros((0, d))
            conj = np.asarray(potentials.conjugate(i, np.linalg.norm(w, axis=1))).reshape(-1)
            inner = np.einsum("nd,nd->n", tuples[:, i], w)
            others = values.sum(axis=1) - values[:, i]
            fenchel = np.abs(values[:, i] + conj - inner) / (1 + np.abs(inner))
            identity = np.abs(others - conj) / (1 + np.abs(conj))
            for name, residuals in (("subgradient", fenchel), ("conjugate_identity", identity)):
                record, value = _record(f"{name}[{i}]", residuals, tol)
                records.append(record)
                worst = max(worst, value)
    elif isinstance(potentials, PotentialSet):
        if objective != "det":
            raise ContractViolation("Discrete subgradient checks support the det objective only")
        if not isinstance(support, Coupling):
            raise ContractViolation("Discrete potentials are checked against a Coupling")
        plan = support
        _, indices = _discrete_parts(plan, potentials, objective)
        tuples = plan.tuples(indices)
        d = plan.dim
        values = np.stack(
            [potentials.tables[i][indices[:, i]] for i in range(d)], axis=1
        ).reshape(-1, d)
        for i in range(d):
            atoms = plan.marginals[i].atoms
            w = batch_signed_wedge_excluding(tuples, i) if tuples.shape[0] else np.zeros((0, d))
            conj = (w @ atoms.T - potentials.tables[i][None, :]).max(axis=1) if w.shape[0] else np.zeros(0)
            inner = np.einsum("nd,nd->n", tuples[:, i], w)
            others = values.sum(axis=1) - values[:, i]
            fenchel = np.abs(values[:, i] + conj - inner) / (1 + np.abs(inner))
            identity = np.abs(others - conj) / (1 + np.abs(conj))
            for name, residuals in (("subgradient", fenchel), ("conjugate_identity", identity)):
                record, value = _record(f"{name}[{i}]", residuals, tol)
                records.append(record)
                worst = max(worst, value)
    else:
        raise ContractViolation(f"Unsupported potentials {type(potentials)}")
    return CertificateReport.from_records(records, subgradient=worst)


def check_gradient_system_3d(
    support: np.ndarray, solution: RadialSolution, tol: float = GRADIENT_TOL
) -> CertificateReport:
    """
    On tuples ``(x, y, z)`` in R^3, the gradients of the radial potentials
    against the wedges: ``∇φ(x) = y∧z``, ``∇ψ(y) = −x∧z``, ``∇χ(z) = x∧y``.

    Also checked: the Euler identities ``⟨x_i, ∇φ_i(x_i)⟩ = det``, the
    determinant of the three gradients against ``det²``, and the
    reconstruction ``z = ∇φ(x)∧∇ψ(y) / ⟨x, ∇φ(x)⟩``. Tuples with a zero point
    are skipped and counted.
    """
    if solution.dim != 3:
        raise ContractViolation(f"The gradient system is stated in R^3, got d = {solution.dim}")
    tuples = _radial_support(support, solution)
    norms = np.linalg.norm(tuples, axis=2)
    usable = np.all(norms > 0, axis=1)
    skipped = int(np.count_nonzero(~usable))
    tuples, norms = tuples[usable], norms[usable]
    if skipped:
        log.info("skipping %d tuples with a zero point", skipped)

    records: List[ConditionRecord] = []
    worst = 0.0
    n = tuples.shape[0]
    if n == 0:
        return CertificateReport.from_records(records, skipped=skipped)
    dets = batch_det(tuples)
    gradients = np.stack(
        [
            np.asarray(solution.slope(i, norms[:, i])).reshape(-1, 1)
            * tuples[:, i]
            / norms[:, i, None]
            for i in range(3)
        ],
        axis=1,
    )
    for i in range(3):
        w = batch_signed_wedge_excluding(tuples, i)
        scale = np.maximum(
            np.maximum(np.linalg.norm(gradients[:, i], axis=1), np.linalg.norm(w, axis=1)),
            np.finfo(float).tiny,
        )
        residuals = np.linalg.norm(gradients[:, i] - w, axis=1) / scale
        record, value = _record(f"gradient[{i}]", residuals, tol)
        records.append(record)
        worst = max(worst, value)
    for i in range(3):
        euler = np.einsum("nd,nd->n", tuples[:, i], gradients[:, i])
        record, _ = _record(f"euler[{i}]", np.abs(euler - dets) / (1 + np.abs(dets)), tol)
        records.append(record)
    gradient_dets = batch_det(gradients)
    record, _ = _record(
        "gradient_det", np.abs(gradient_dets - dets ** 2) / (1 + dets ** 2), tol
    )
    records.append(record)
    pairing = np.einsum("nd,nd->n", tuples[:, 0], gradients[:, 0])
    safe = np.where(pairing == 0, 1.0, pairing)
    rebuilt = batch_wedge(gradients[:, :2]) / safe[:, None]
    scale = np.maximum(norms[:, 2], np.finfo(float).tiny)
    residuals = np.where(
        pairing == 0, np.inf, np.linalg.norm(rebuilt - tuples[:, 2], axis=1) / scale
    )
    record, _ = _record("reconstruction", residuals, tol)
    records.append(record)
    return CertificateReport.from_records(records, subgradient=worst, skipped=skipped)


def sign_audit(plan: Coupling, threshold: float = SIGN_TOL) -> float:
    """
    Total mass the plan puts on tuples with ``det < −threshold``.
    """
    dets = objective_tensor(plan.marginals, "det")
    return float(plan.mass[dets < -threshold].sum())


##
# Monte-Carlo checks
##


def _const(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones(x.shape[0])


def _inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("nd,nd->n", x, y)


def _poly4(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x[:, 0] ** 2 * y[:, 0] ** 2


def _mixed(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x[:, 0] * y[:, 1] + x[:, 1] ** 2


def _trig(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.cos(3 * x[:, 0]) * np.sin(2 * y[:, 1] + 1)


FUBINI_CATALOG: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "const": _const,
    "inner": _inner,
    "poly4": _poly4,
    "mixed": _mixed,
    "trig": _trig,
}


def _fiber_pairs(k: int, size: int, gen: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``x`` uniform on S^k and ``y`` uniform on the great sphere orthogonal to it.
    """
    x = uniform_directions(size, k + 1, gen)
    y = sample_subsphere_batch(x[:, None, :], np.ones(size), gen)
    return x, y


def fubini_sphere_test(
    k: int, f: str, n: int, rng: RngState
) -> FubiniEstimate:
    """
    Estimate both iterated integrals of ``f`` over the pairs of orthogonal
    unit vectors of R^{k+1}: the outer variable first (``x`` uniform, ``y`` on
    its orthogonal sphere) and the inner one first. They agree when
    ``|lhs − rhs| ≤ 4·stderr + 1e-12``.
    """
    if k < 2:
        raise ContractViolation(f"Sphere dimension must be at least 2, got {k}")
    if f not in FUBINI_CATALOG:
        raise ContractViolation(f"Unknown test function {f!r}, expected one of {list(FUBINI_CATALOG)}")
    if n < 2:
        raise ContractViolation(f"Need at least two samples, got {n}")
    function = FUBINI_CATALOG[f]
    seq = as_seed_sequence(rng)

    def chunk(index: int, size: int) -> np.ndarray:
        x, y = _fiber_pairs(k, size, generator(child_sequence(seq, index, 0)))
        lhs = function(x, y)
        # the inner variable drawn first plays the role of y
        y2, x2 = _fiber_pairs(k, size, generator(child_sequence(seq, index, 1)))
        rhs = function(x2, y2)
        return np.array([lhs.sum(), (lhs ** 2).sum(), rhs.sum(), (rhs ** 2).sum()])

    sums = np.sum(map_chunks(chunk, n), axis=0)
    lhs, rhs = sums[0] / n, sums[2] / n
    var_lhs = max(sums[1] / n - lhs ** 2, 0.0) * n / (n - 1)
    var_rhs = max(sums[3] / n - rhs ** 2, 0.0) * n / (n - 1)
    stderr = float(np.sqrt((var_lhs + var_rhs) / n))
    passed = abs(lhs - rhs) <= 4 * stderr + 1e-12
    log.info("fubini %s on S^%d: lhs %.6g rhs %.6g stderr %.3g", f, k, lhs, rhs, stderr)
    return FubiniEstimate(lhs=float(lhs), rhs=float(rhs), stderr=stderr, passed=bool(passed))


def marginal_stat_test(
    samples: np.ndarray, expected: RadialMeasure, radially_symmetric: bool = True
) -> MarginalTestReport:
    """
    Test ``n ≥ 10^4`` points against a radial law.

    The radii go through a Kolmogorov–Smirnov test against ``expected``
    (pass at p ≥ ``KS_ALPHA``). For a radially symmetric law the directions
    must also have a mean of norm at most ``4√d/√n`` and second moments
    ``E⟨u, e⟩² = 1/d`` along every axis and the diagonal, within
    ``MOMENT_SIGMAS`` standard errors.
    """
    points = np.asarray(samples, dtype=float)
    if points.ndim != 2:
        raise ContractViolation(f"Expected points of shape (n, d), got {points.shape}")
    n, d = points.shape
    if n < MIN_MARGINAL_SAMPLES:
        raise ContractViolation(f"Need at least {MIN_MARGINAL_SAMPLES} samples, got {n}")
    radii = np.linalg.norm(points, axis=1)
    ks = stats.kstest(radii, expected.cdf)

    units = points[radii > 0] / radii[radii > 0, None]
    mean_norm = float(np.linalg.norm(units.mean(axis=0)))
    threshold = 4 * np.sqrt(d) / np.sqrt(n)
    axes = np.vstack([np.eye(d), np.full((1, d), 1 / np.sqrt(d))])
    # Var⟨u, e⟩² for u uniform on the sphere
    variance = (2 * d - 2) / (d ** 2 * (d + 2))
    moments = ((units @ axes.T) ** 2).mean(axis=0)
    score = float(np.abs(moments - 1 / d).max() / np.sqrt(variance / units.shape[0]))

    passed = ks.pvalue >= KS_ALPHA
    if radially_symmetric:
        passed = passed and mean_norm <= threshold and score <= MOMENT_SIGMAS
    return MarginalTestReport(
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        mean_direction_norm=mean_norm,
        mean_direction_threshold=float(threshold),
        second_moment_score=score,
        passed=bool(passed),
    )


def hadamard_young_bound(
    x: object, p: Optional[Sequence[float]] = None
) -> HadamardYoung:
    """
    ``(det(x), ∏|x_i|, Σ|x_i|^{p_i}/p_i)`` for one tuple or a batch.
    ``|det| ≤ ∏|x_i| ≤ H_0`` must hold; a break raises.

    >>> tuple(float(v) for v in hadamard_young_bound(np.eye(3), [3, 3, 3]))
    (1.0, 1.0, 1.0)
    """
    tuples = np.asarray(x, dtype=float)
    single = tuples.ndim == 2
    batch = tuples[None] if single else tuples
    if batch.ndim != 3 or batch.shape[1] != batch.shape[2]:
        raise ContractViolation(f"Expected tuples of shape (n, d, d), got {tuples.shape}")
    d = batch.shape[1]
    exponents = young_exponents(d, p)
    norms = np.linalg.norm(batch, axis=2)
    dets = batch_det(batch) if batch.shape[0] else np.zeros(0)
    prods = np.prod(norms, axis=1)
    h0 = (norms ** exponents / exponents).sum(axis=1)
    slack = 1e-12 * (1 + h0)
    if np.any(np.abs(dets) > prods + slack) or np.any(prods > h0 + slack):
        raise InternalInconsistencyError("The Hadamard–Young chain is broken")
    if single:
        return HadamardYoung(float(dets[0]), float(prods[0]), float(h0[0]))
    return HadamardYoung(dets, prods, h0)
