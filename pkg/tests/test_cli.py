#!/usr/bin/env python3
from __future__ import annotations

import json

import pytest

from src.app import cli
from src.domain.config import FemKind, ProblemCase
from src.infrastructure.settings import Settings


pytestmark = pytest.mark.usefixtures("clean_env")


def test_solve_defaults() -> None:
    config = cli.parse(["solve"])
    run = config.run
    assert (run.alpha, run.final_time, run.steps, run.mesh) == (0.5, 0.1, 512, 8)
    assert run.fem is FemKind.P1 and run.case is ProblemCase.A
    assert run.source_term.name == "sqrt1pu2"
    assert config.format == "csv" and config.out is None


def test_settings_supply_defaults() -> None:
    settings = Settings(log_level="DEBUG", workers=3, linear_solver="direct")
    config = cli.parse(["study"], settings)
    assert config.plan.workers == 3
    assert config.plan.base.linear_solver == "direct"
    assert config.log_level == "DEBUG"


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--alpha", "1.5"],
        ["solve", "--alpha", "0"],
        ["solve", "--bogus"],
        ["solve", "--fem", "q2"],
        ["study", "--mesh-ladder", "16,8"],
        ["study", "--mesh-ladder", "8,16", "--ref-mesh", "24"],
        ["study", "--case", "a", "--reference", "exact"],
        ["oracle", "ml", "--alpha", "0.5"],
        ["oracle", "ml", "--alpha", "0.5", "--x", "-1"],
        ["weights", "--n", "3"],
        ["weights", "--alpha", "0.5", "--n", "-1"],
        ["temporal-study", "--steps-ladder", "64,a"],
        [],
    ],
)
def test_usage_errors(argv) -> None:
    with pytest.raises(cli.UsageError):
        cli.parse(argv)
    assert cli.main(argv) == cli.EXIT_USAGE


def test_flux_space_must_agree_with_fem() -> None:
    with pytest.raises(cli.UsageError, match="conflicts with --flux-space"):
        cli.parse(["solve", "--fem", "p1", "--flux-space", "rt0"])
    assert cli.parse(["solve", "--fem", "rt0", "--flux-space", "rt0"]).run.fem is FemKind.RT0P0


def test_config_file_and_flag_precedence(tmp_path) -> None:
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"alpha": 0.3, "steps": 64, "mesh-ladder": [4, 8], "fem": "rt0"}))
    config = cli.parse(["study", "--config", str(path), "--steps", "32"])
    assert config.plan.base.alpha == 0.3
    assert config.plan.base.steps == 32
    assert config.plan.ladder == (4, 8)
    assert config.plan.base.fem is FemKind.RT0P0


def test_config_file_supplies_required_values(tmp_path) -> None:
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"alpha": 0.5, "n": 2}))
    config = cli.parse(["weights", "--config", str(path)])
    assert (config.alpha, config.n) == (0.5, 2)


def test_config_file_rejects_unknown_keys(tmp_path) -> None:
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"alpha": 0.3, "colour": "red"}))
    with pytest.raises(cli.UsageError, match="colour"):
        cli.parse(["solve", "--config", str(path)])


def test_config_file_must_exist(tmp_path) -> None:
    with pytest.raises(cli.UsageError):
        cli.parse(["solve", "--config", str(tmp_path / "missing.json")])


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--alpha", "0.3", "--fem", "rt0", "--case", "b", "--mesh", "16", "--linearized", "--out", "x.csv"],
        ["solve", "--case", "manufactured", "--mode", "2,1", "--source", "identity", "--dump-mesh", "m.txt"],
        ["study", "--mesh-ladder", "4,8", "--ref-mesh", "32", "--ref-steps", "64", "--workers", "2", "--format", "json"],
        ["study", "--case", "manufactured", "--reference", "exact", "--save"],
        ["temporal-study", "--alphas", "0.3,0.7", "--steps-ladder", "8,16"],
        ["temporal-study", "--mode", "1,2"],
        ["oracle", "ml", "--alpha", "0.5", "--x", "2.0"],
        ["weights", "--alpha", "0.25", "--n", "4", "--log-level", "debug"],
    ],
)
def test_render_round_trip(argv) -> None:
    config = cli.parse(argv)
    assert cli.parse(cli.render(config)) == config


def test_weights_output(capsys) -> None:
    assert cli.main(["weights", "--alpha", "0.5", "--n", "2"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["0,1.0,1.0", "1,-0.5,0.5", "2,-0.125,0.375"]


def test_oracle_output(capsys) -> None:
    assert cli.main(["oracle", "ml", "--alpha", "1", "--x", "1"]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == "0.36787944"


def test_solve_writes_json_report(tmp_path, capsys) -> None:
    out = tmp_path / "out" / "solve.json"
    argv = ["solve", "--case", "manufactured", "--mesh", "4", "--steps", "8", "--format", "json", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    payload = json.loads(out.read_text())
    row = payload["rows"][0]
    assert row["M"] == 4 and row["N"] == 8
    assert row["err_u_l2"] > 0.0
    assert payload["metadata"]["command"] == "solve"
    assert (tmp_path / "out" / "solve.manifest.json").exists()
    assert capsys.readouterr().out == ""


def test_solve_dumps_mesh_and_matrices(tmp_path) -> None:
    mesh_file = tmp_path / "mesh.txt"
    matrices = tmp_path / "mats"
    argv = ["solve", "--mesh", "2", "--steps", "2", "--fem", "rt0", "--dump-mesh", str(mesh_file), "--dump-matrices", str(matrices)]
    assert cli.main(argv) == cli.EXIT_OK
    assert mesh_file.read_text()
    assert sorted(p.name for p in matrices.iterdir()) == ["div_block.coo", "flux_mass.coo", "mass.coo"]


def test_study_prints_csv(capsys) -> None:
    argv = ["study", "--mesh-ladder", "2,4", "--steps", "4", "--ref-mesh", "8"]
    assert cli.main(argv) == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("fem,case,alpha,M,N")
    assert [line.split(",")[3] for line in lines[1:]] == ["2", "4"]


def test_save_uses_output_dir(tmp_path, monkeypatch) -> None:
    monkeypatch.setenv("FRACSUB_OUTPUT_DIR", str(tmp_path / "reports"))
    assert cli.main(["temporal-study", "--steps-ladder", "8,16", "--save", "--format", "markdown"]) == cli.EXIT_OK
    assert (tmp_path / "reports" / "temporal_study.md").exists()
    assert (tmp_path / "reports" / "temporal_study.manifest.json").exists()


def test_failing_study_exits_with_failure() -> None:
    argv = ["study", "--mesh-ladder", "2,4", "--steps", "4", "--fp-max-iters", "1"]
    assert cli.main(argv) == cli.EXIT_FAILURE


def test_bad_environment_is_a_usage_error(monkeypatch) -> None:
    monkeypatch.setenv("FRACSUB_WORKERS", "zero")
    assert cli.main(["weights", "--alpha", "0.5", "--n", "1"]) == cli.EXIT_USAGE


@pytest.mark.slow
def test_rt0_quarter_disk_study(tmp_path) -> None:
    out = tmp_path / "rt0.csv"
    argv = ["study", "--fem", "rt0", "--case", "b", "--mesh-ladder", "8,16,32", "--steps", "64", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 3
    assert all(r.split(",")[7] for r in rows)
