import json
import subprocess
import sys

import pytest

from . import DetmmotError, _cli
from ._cli import RunConfig, _write_files


def run(*args, cwd, expected=0):
    result = subprocess.run(
        [sys.executable, "-m", "detmmot", *map(str, args)],
        cwd=cwd,
        capture_output=True,
        text=True,
    )
    assert result.returncode == expected, result.stderr
    return result


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


def discrete(atoms):
    return {
        "type": "discrete",
        "dim": len(atoms[0]),
        "atoms": atoms,
        "weights": [1 / len(atoms)] * len(atoms),
    }


@pytest.fixture
def instance(tmp_path):
    return write_json(
        tmp_path / "instance.json",
        {
            "objective": "det",
            "marginals": [
                discrete([[1.0, 0.0], [0.0, 1.0]]),
                discrete([[0.0, 1.0], [-1.0, 0.0]]),
            ],
        },
    )


def test_help_runs():
    subprocess.check_call([sys.executable, "-m", "detmmot", "--help"])


def test_solve(tmp_path, instance):
    run("solve", instance, "--out", "report.json", cwd=tmp_path)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["primal_value"] == pytest.approx(1.0)
    assert report["objective"] == "det"

    run("certify", "report.json", "--out", "certificate.json", cwd=tmp_path)
    assert json.loads((tmp_path / "certificate.json").read_text())["passed"]


def test_solve_objective_override(tmp_path, instance):
    run("solve", instance, "--objective", "absdet", "--out", "abs.json", cwd=tmp_path)
    assert json.loads((tmp_path / "abs.json").read_text())["objective"] == "absdet"


def test_solve_malformed(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    run("solve", "bad.json", cwd=tmp_path, expected=2)


def test_solve_missing_file(tmp_path):
    run("solve", "missing.json", cwd=tmp_path, expected=2)


def test_solve_guard(tmp_path, instance):
    run("solve", instance, "--max-entries", "3", cwd=tmp_path, expected=4)


def test_radial_and_certify(tmp_path):
    run("radial", "--uniform-ball", "--dim", "3", "--n", "2000", "--seed", "7", "--out", "out", cwd=tmp_path)
    out = tmp_path / "out"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n"] == 2000 and summary["seed"] == 7
    assert summary["value_closed_form"] == pytest.approx(0.5, abs=1e-5)
    header = (out / "samples.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "x1_1" and header.split(",")[-1] == "det"
    assert len(header.split(",")) == 10

    run(
        "certify",
        "out/samples.csv",
        "--potentials",
        "out/potentials.json",
        "--out",
        "out/certificate.json",
        cwd=tmp_path,
    )
    certificate = json.loads((out / "certificate.json").read_text())
    assert certificate["passed"]


def test_radial_is_reproducible(tmp_path):
    for name in ("a", "b"):
        run("radial", "--uniform-ball", "--n", "500", "--seed", "0x2A", "--out", name, cwd=tmp_path)
    for file in ("samples.csv", "summary.json", "potentials.json"):
        assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()


@pytest.mark.parametrize("sampler", ["perturbed", "mixture"])
def test_radial_samplers(tmp_path, sampler):
    run("radial", "--uniform-ball", "--n", "500", "--sampler", sampler, "--out", "out", cwd=tmp_path)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["sampler"] == sampler


def test_radial_needs_marginals(tmp_path):
    run("radial", cwd=tmp_path, expected=2)


def test_radial_atomic_marginal(tmp_path):
    atomic = {"type": "radial", "quantile_u": [0, 0.5, 1], "quantile_r": [1, 1, 2]}
    smooth = {"type": "radial", "quantile_u": [0, 1], "quantile_r": [0, 1]}
    write_json(tmp_path / "marginals.json", {"marginals": [atomic, smooth]})
    run("radial", "marginals.json", "--n", "10", cwd=tmp_path, expected=3)


def test_certify_dimension_mismatch(tmp_path):
    run("radial", "--uniform-ball", "--dim", "2", "--n", "10", "--out", "two", cwd=tmp_path)
    run("radial", "--uniform-ball", "--dim", "3", "--n", "10", "--out", "three", cwd=tmp_path)
    run(
        "certify",
        "three/samples.csv",
        "--potentials",
        "two/potentials.json",
        cwd=tmp_path,
        expected=2,
    )


def test_certify_needs_potentials(tmp_path):
    run("radial", "--uniform-ball", "--n", "10", "--out", "out", cwd=tmp_path)
    run("certify", "out/samples.csv", cwd=tmp_path, expected=2)


def test_compare(tmp_path):
    run(
        "compare",
        "--uniform-ball",
        "--dim",
        "2",
        "--n-radii",
        "2",
        "--n-dirs",
        "4",
        "--out",
        "comparison.json",
        cwd=tmp_path,
    )
    comparison = json.loads((tmp_path / "comparison.json").read_text())
    # a rotated cross holds the quarter turn of every direction, so the LP attains the radial value
    assert comparison["relative_deviation"] < 1e-3
    assert comparison["scheme"] == "design"


def test_compare_guard(tmp_path):
    run("compare", "--uniform-ball", "--n-radii", "8", "--n-dirs", "20", cwd=tmp_path, expected=4)


def test_fubini(tmp_path):
    run("fubini-test", "--k", "3", "--n", "2000", "--out", "fubini.json", cwd=tmp_path)
    results = json.loads((tmp_path / "fubini.json").read_text())
    assert [r["f"] for r in results] == ["const", "inner", "poly4", "mixed", "trig"]
    assert all(r["passed"] for r in results)


def test_monge4d(tmp_path):
    run("monge4d", "--n", "20000", "--out", "out", cwd=tmp_path)
    summary = json.loads((tmp_path / "out" / "monge4d.json").read_text())
    assert summary["passed"]
    assert len(summary["marginal_tests"]) == 3


def test_bad_seed(tmp_path):
    run("radial", "--uniform-ball", "--seed", "-1", cwd=tmp_path, expected=2)


def test_outputs_land_together(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(OSError):
        _write_files({tmp_path / "a.json": b"{}", blocker / "b.json": b"{}"})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["blocker"]


def test_radial_writes_nothing_on_failure(tmp_path, monkeypatch):
    def broken(solution):
        raise DetmmotError("cannot serialize")

    monkeypatch.setattr(_cli, "radial_solution_to_json", broken)
    config = RunConfig(
        command="radial",
        n_samples=100,
        out=tmp_path / "out",
        options={"uniform_ball": True, "dim": 3, "sampler": "coupling"},
    )
    with pytest.raises(DetmmotError):
        _cli.cmd_radial(config)
    assert not (tmp_path / "out").exists()
