import argparse
import io
import logging
import os
import pathlib
import sys
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import (
    DEFAULT_SEED,
    CertificateReport,
    ConditionRecord,
    CouplingSampler,
    DetmmotError,
    RadialMeasure,
    RadialSolution,
)
from ._errors import ContractViolation
from ._json_data import (
    dumps,
    instance_from_json,
    radial_marginals_from_json,
    radial_solution_to_json,
    read_json,
    report_from_json,
    report_to_json,
    value_to_json,
)
from ._linalg import batch_det
from ._lp import GAP_TOL, MAX_ENTRIES, discretize_radial_instance, duality_gap, solve_primal
from ._optcheck import (
    FUBINI_CATALOG,
    GRADIENT_TOL,
    SUBGRADIENT_TOL,
    TIGHTNESS_TOL,
    check_gradient_system_3d,
    check_subgradient,
    check_tightness,
    fubini_sphere_test,
    marginal_stat_test,
)
from ._radial import (
    monge_maps_4d,
    sample_absdet_mixture,
    sample_coupling,
    sample_coupling_perturbed,
    solve_radial,
    summarize_samples,
    uniform_ball_points,
)
from ._random import as_seed_sequence, child_sequence, generator

try:
    from rich.console import Console
    from rich.json import JSON
    from rich.logging import RichHandler
except ImportError:
    # If we can't import rich, just create dummy classes which use the basic printing
    class Console:  # type: ignore
        def print(self, *args, **kwargs):
            print(*args, **kwargs)

    class JSON:  # type: ignore
        @classmethod
        def from_data(cls, data, **kwargs):
            return dumps(data).decode()

    RichHandler = None  # type: ignore

__all__ = ["main", "RunConfig", "Tolerances", "parser"]

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
FAILED_EXIT_CODE = 3
BAD_INPUT_EXIT_CODE = 2


@dataclass(frozen=True)
class Tolerances:
    tightness: float = TIGHTNESS_TOL
    subgradient: float = SUBGRADIENT_TOL
    gradient: float = GRADIENT_TOL
    gap: float = GAP_TOL


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: Tuple[pathlib.Path, ...] = ()
    seed: int = DEFAULT_SEED
    n_samples: int = DEFAULT_SAMPLES
    tolerances: Tolerances = field(default_factory=Tolerances)
    out: Optional[pathlib.Path] = None
    max_entries: int = MAX_ENTRIES
    # the parsed arguments of the subcommand
    options: Dict[str, object] = field(default_factory=dict, compare=False)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        inputs = tuple(
            p for p in (getattr(args, "input", None), getattr(args, "potentials", None)) if p
        )
        return cls(
            command=args.command,
            inputs=inputs,
            seed=args.seed,
            n_samples=DEFAULT_SAMPLES if args.n is None else args.n,
            tolerances=Tolerances(
                tightness=args.tol_tightness,
                subgradient=args.tol_subgradient,
                gradient=args.tol_gradient,
                gap=args.tol_gap,
            ),
            out=args.out,
            max_entries=args.max_entries,
            options=vars(args),
        )


def _seed(text: str) -> int:
    value = int(text, 0)
    if value < 0 or value >= 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


common = argparse.ArgumentParser(add_help=False)
common.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="64-bit seed")
common.add_argument("--n", type=int, default=None, help="number of samples")
common.add_argument("--out", type=pathlib.Path, default=None, help="output file or directory")
common.add_argument("--tol-tightness", type=float, default=TIGHTNESS_TOL)
common.add_argument("--tol-subgradient", type=float, default=SUBGRADIENT_TOL)
common.add_argument("--tol-gradient", type=float, default=GRADIENT_TOL)
common.add_argument("--tol-gap", type=float, default=GAP_TOL)
common.add_argument(
    "--max-entries", type=int, default=MAX_ENTRIES, help="size guard on objective tensors"
)
common.add_argument("-v", "--verbose", action="store_true", help="log debug output")

parser = argparse.ArgumentParser(
    prog="detmmot",
    description="Multi-marginal optimal transport for the determinant objective.",
)
subparsers = parser.add_subparsers(dest="command", required=True)

solve_parser = subparsers.add_parser(
    "solve", parents=[common], help="solve a discrete instance exactly"
)
solve_parser.add_argument("input", type=pathlib.Path, help="instance JSON")
solve_parser.add_argument(
    "--objective",
    choices=["det", "absdet", "det_plus_h0", "det_minus_h0"],
    default=None,
    help="overrides the objective of the instance",
)


def _add_radial_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=pathlib.Path, nargs="?", help="radial marginals JSON")
    p.add_argument(
        "--uniform-ball",
        action="store_true",
        help="use copies of the radial law of the uniform unit ball",
    )
    p.add_argument("--dim", type=int, default=3, help="dimension for --uniform-ball")


radial_parser = subparsers.add_parser(
    "radial", parents=[common], help="solve radial marginals and sample the coupling"
)
_add_radial_source(radial_parser)
radial_parser.add_argument(
    "--sampler", choices=["coupling", "perturbed", "mixture"], default="coupling"
)
radial_parser.add_argument(
    "--e", type=float, nargs=3, default=(0.0, 0.0, 1.0), help="unit vector for --sampler perturbed"
)
radial_parser.add_argument("--density", choices=["direction", "frame"], default="direction")
radial_parser.add_argument("--p", type=float, default=0.5, help="weight for --sampler mixture")

certify_parser = subparsers.add_parser(
    "certify", parents=[common], help="check optimality conditions"
)
certify_parser.add_argument(
    "input", type=pathlib.Path, help="samples CSV (radial) or solve report JSON"
)
certify_parser.add_argument(
    "--potentials", type=pathlib.Path, default=None, help="radial potentials JSON"
)

compare_parser = subparsers.add_parser(
    "compare", parents=[common], help="discretized LP value against the radial value"
)
_add_radial_source(compare_parser)
compare_parser.add_argument("--n-radii", type=int, default=6)
compare_parser.add_argument("--n-dirs", type=int, default=12)
compare_parser.add_argument("--scheme", choices=["design", "uniform"], default="design")

fubini_parser = subparsers.add_parser(
    "fubini-test", parents=[common], help="Monte-Carlo check of the sphere Fubini identity"
)
fubini_parser.add_argument("--k", type=int, default=2, help="sphere dimension")
fubini_parser.add_argument(
    "--f", choices=list(FUBINI_CATALOG), default=None, help="test function, default all"
)

monge_parser = subparsers.add_parser(
    "monge4d", parents=[common], help="push uniform ball samples through the 4D maps"
)


def main(argv: Optional[Sequence[str]] = None) -> None:
    """
    Parse the CLI commands, run one, and exit with its status.
    """
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    config = RunConfig.from_args(args)
    try:
        code = COMMANDS[config.command](config)
    except DetmmotError as e:
        log.error("%s", e)
        code = e.exit_code
    except OSError as e:
        log.error("%s", e)
        code = BAD_INPUT_EXIT_CODE
    sys.exit(code)


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING
    handlers: List[logging.Handler] = (
        [RichHandler(rich_tracebacks=True)] if RichHandler is not None else []
    )
    logging.basicConfig(
        level=level, format="%(message)s", datefmt="[%X]", handlers=handlers or None
    )


##
# output
##


def _write_files(files: Dict[pathlib.Path, bytes]) -> None:
    """
    Stage every file next to its target, then move them into place in order.
    A failure while staging leaves none of them written.
    """
    staged: List[Tuple[pathlib.Path, pathlib.Path]] = []
    try:
        for path, data in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(f".{path.name}.tmp")
            staged.append((tmp, path))
            tmp.write_bytes(data)
    except OSError:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _json_bytes(data: object) -> bytes:
    return dumps(data) + b"\n"


def _write_json(path: pathlib.Path, data: object) -> None:
    _write_files({path: _json_bytes(data)})


def _csv_bytes(rows: np.ndarray, header: Sequence[str]) -> bytes:
    buffer = io.BytesIO()
    np.savetxt(
        buffer,
        rows.reshape(-1, len(header)),
        fmt="%.17g",
        delimiter=",",
        header=",".join(header),
        comments="",
        newline="\n",
    )
    return buffer.getvalue()


def _read_csv(path: pathlib.Path) -> Tuple[List[str], np.ndarray]:
    with open(path) as f:
        header = f.readline().strip().split(",")
    with warnings.catch_warnings():
        # a header-only file is a valid empty sample
        warnings.simplefilter("ignore", UserWarning)
        try:
            rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except ValueError as e:
            raise ContractViolation(f"Malformed CSV {path}: {e}") from e
    if rows.size == 0:
        rows = rows.reshape(0, len(header))
    if rows.shape[1] != len(header):
        raise ContractViolation(f"{path} has {rows.shape[1]} columns, header has {len(header)}")
    return header, rows


def _tuple_header(d: int) -> List[str]:
    return [f"x{i + 1}_{k + 1}" for i in range(d) for k in range(d)] + ["det"]


def _tuples_to_rows(tuples: np.ndarray) -> np.ndarray:
    n, d, _ = tuples.shape
    dets = batch_det(tuples) if n else np.zeros(0)
    return np.concatenate([tuples.reshape(n, d * d), dets[:, None]], axis=1)


def _print(data: object) -> None:
    Console().print(JSON.from_data(value_to_json(data)))


def _out(config: RunConfig, default: str) -> pathlib.Path:
    return config.out if config.out is not None else pathlib.Path(default)


##
# commands
##


def cmd_solve(config: RunConfig) -> int:
    marginals, objective = instance_from_json(read_json(config.inputs[0]))
    objective = config.options.get("objective") or objective
    report = solve_primal(marginals, str(objective), max_entries=config.max_entries)
    gap = duality_gap(report)
    _write_json(_out(config, "report.json"), report_to_json(report))
    _print({"objective": objective, "value": report.primal_value, "gap": gap})
    return 0


def _radial_marginals(config: RunConfig) -> Tuple[RadialMeasure, ...]:
    if config.options.get("uniform_ball"):
        d = int(config.options["dim"])  # type: ignore
        return tuple(RadialMeasure.uniform_ball(d) for _ in range(d))
    if not config.inputs:
        raise ContractViolation("Pass a radial marginals file or --uniform-ball")
    return radial_marginals_from_json(read_json(config.inputs[0]))


def cmd_radial(config: RunConfig) -> int:
    solution = solve_radial(_radial_marginals(config))
    sampler = CouplingSampler(solution)
    kind = config.options.get("sampler", "coupling")
    n = config.n_samples
    if kind == "perturbed":
        tuples = sample_coupling_perturbed(
            sampler,
            np.asarray(config.options["e"], dtype=float),
            n,
            config.seed,
            density=str(config.options["density"]),  # type: ignore
        )
    elif kind == "mixture":
        tuples = sample_absdet_mixture(sampler, float(config.options["p"]), n, config.seed)  # type: ignore
    else:
        tuples = sample_coupling(sampler, n, config.seed)
    summary = summarize_samples(tuples, solution.value, config.seed)
    summary["sampler"] = kind
    summary["dim"] = solution.dim
    summary["value_empirical_abs"] = (
        float(np.abs(batch_det(tuples)).mean()) if tuples.shape[0] else float("nan")
    )

    out = _out(config, ".")
    # summary.json lands last and marks a complete run
    _write_files(
        {
            out / "samples.csv": _csv_bytes(
                _tuples_to_rows(tuples), _tuple_header(solution.dim)
            ),
            out / "potentials.json": _json_bytes(radial_solution_to_json(solution)),
            out / "summary.json": _json_bytes(summary),
        }
    )
    _print(summary)
    return 0


def _certify_radial(config: RunConfig) -> CertificateReport:
    if len(config.inputs) < 2:
        raise ContractViolation("Radial samples need --potentials")
    solution = RadialSolution.from_json_data(read_json(config.inputs[1]))  # type: ignore
    header, rows = _read_csv(config.inputs[0])
    d = solution.dim
    if len(header) != d * d + 1:
        raise ContractViolation(
            f"Samples have {len(header)} columns, potentials need {d * d + 1} for d = {d}"
        )
    tuples = rows[:, : d * d].reshape(-1, d, d)
    tol = config.tolerances
    reports = [
        check_tightness(tuples, solution, tol.tightness),
        check_subgradient(tuples, solution, tol.subgradient),
    ]
    if d == 3:
        reports.append(check_gradient_system_3d(tuples, solution, tol.gradient))
    return CertificateReport.combine(reports)


def _certify_report(config: RunConfig) -> CertificateReport:
    report = report_from_json(read_json(config.inputs[0]))
    tol = config.tolerances
    gap = report.gap
    limit = tol.gap * (1 + abs(report.primal_value))
    gap_report = CertificateReport.from_records(
        [ConditionRecord("duality_gap", gap, limit, -limit <= gap <= limit)]
    )
    reports = [check_tightness(report.plan, report.potentials, tol.tightness, report.objective)]
    if report.objective == "det":
        reports.append(check_subgradient(report.plan, report.potentials, tol.subgradient))
    return CertificateReport.combine(reports + [gap_report])


def cmd_certify(config: RunConfig) -> int:
    source = config.inputs[0]
    if source.suffix == ".csv":
        certificate = _certify_radial(config)
    else:
        certificate = _certify_report(config)
    _write_json(_out(config, "certificate.json"), certificate.to_json_data())
    _print(
        {
            "passed": certificate.passed,
            "max_feasibility_violation": certificate.max_feasibility_violation,
            "max_tightness_gap": certificate.max_tightness_gap,
            "max_subgradient_residual": certificate.max_subgradient_residual,
        }
    )
    return 0 if certificate.passed else FAILED_EXIT_CODE


def cmd_compare(config: RunConfig) -> int:
    marginals = _radial_marginals(config)
    solution = solve_radial(marginals)
    n_radii = int(config.options["n_radii"])  # type: ignore
    n_dirs = int(config.options["n_dirs"])  # type: ignore
    scheme = str(config.options["scheme"])
    discrete = discretize_radial_instance(
        marginals,
        n_radii,
        n_dirs,
        config.seed,
        scheme=scheme,
        max_entries=config.max_entries,
    )
    report = solve_primal(discrete, "det", max_entries=config.max_entries)
    deviation = abs(report.primal_value - solution.value) / abs(solution.value)
    result = {
        "value_closed_form": solution.value,
        "value_lp": report.primal_value,
        "relative_deviation": deviation,
        "gap": duality_gap(report),
        "n_radii": n_radii,
        "n_dirs": n_dirs,
        "scheme": scheme,
        "seed": config.seed,
    }
    _write_json(_out(config, "comparison.json"), result)
    _print(result)
    return 0


def cmd_fubini(config: RunConfig) -> int:
    k = int(config.options["k"])  # type: ignore
    names = [config.options["f"]] if config.options.get("f") else list(FUBINI_CATALOG)
    results = []
    for index, name in enumerate(names):
        seq = child_sequence(as_seed_sequence(config.seed), index)
        estimate = fubini_sphere_test(k, str(name), config.n_samples, seq)
        results.append({"f": name, "k": k, "n": config.n_samples, **value_to_json(estimate)})  # type: ignore
    _write_json(_out(config, "fubini.json"), results)
    _print(results)
    return 0 if all(r["passed"] for r in results) else FAILED_EXIT_CODE


def cmd_monge4d(config: RunConfig) -> int:
    n = config.n_samples
    x = uniform_ball_points(n, 4, generator(as_seed_sequence(config.seed)))
    images = monge_maps_4d(x)
    frame = np.stack([x, *images], axis=1)
    norms = np.linalg.norm(x, axis=1)
    gram = np.einsum("nid,njd->nij", frame, frame)
    off = gram - (norms ** 2)[:, None, None] * np.eye(4)
    dets = batch_det(frame) if n else np.zeros(0)
    summary: Dict[str, object] = {
        "n": n,
        "seed": config.seed,
        "max_gram_error": float(np.abs(off).max()) if n else 0.0,
        "max_det_error": float((np.abs(dets - norms ** 4) / np.maximum(norms ** 4, 1e-300)).max())
        if n
        else 0.0,
    }
    passed = summary["max_gram_error"] <= 1e-12 and summary["max_det_error"] <= 1e-10  # type: ignore
    if n >= 10_000:
        ball = RadialMeasure.uniform_ball(4)
        tests = [marginal_stat_test(image, ball) for image in images]
        summary["marginal_tests"] = [value_to_json(t) for t in tests]
        passed = passed and all(t.passed for t in tests)
    summary["passed"] = passed
    header = [f"{name}_{k + 1}" for name in ("x", "t2", "t3", "t4") for k in range(4)]
    out = _out(config, ".")
    _write_files(
        {
            out / "monge4d.csv": _csv_bytes(frame.reshape(n, 16), header),
            out / "monge4d.json": _json_bytes(summary),
        }
    )
    _print(summary)
    return 0 if passed else FAILED_EXIT_CODE


COMMANDS = {
    "solve": cmd_solve,
    "radial": cmd_radial,
    "certify": cmd_certify,
    "compare": cmd_compare,
    "fubini-test": cmd_fubini,
    "monge4d": cmd_monge4d,
}
