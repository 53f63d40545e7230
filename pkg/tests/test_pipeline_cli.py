import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np
import pytest

from btdfoot import cli
from btdfoot.inference import PosteriorSample
from btdfoot.evaluation import EvaluationReport, evaluations_to_csv
from btdfoot.pipeline import (
    ConfigError,
    export_goal_parameters,
    load_config,
    parse_config_text,
)
from btdfoot.synthetic import make_world

SMALL = """\
matches = results.csv
fifa_points = fifa.csv
group_fixtures = group.csv
knockout_fixtures = knockout.csv
out = out
train_start = 2018-01-01
train_end = 2021-11-19
chains = 2
warmup = 100
iterations = 100
seed = 7
"""


def write_world(directory: Path, config_text: str = SMALL) -> Path:
    make_world(seed=3).write(directory)
    cfg = directory / "run.cfg"
    cfg.write_text(config_text, encoding="utf-8")
    return cfg


def snapshot(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.is_file()}


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    outs = []
    for name in ("first", "second"):
        root = tmp_path_factory.mktemp(name)
        cfg = write_world(root)
        assert cli.main(["run", "--config", str(cfg)]) == 0
        outs.append(root / "out")
    return outs


def test_full_run_writes_declared_files(two_runs):
    files = set(snapshot(two_runs[0]))
    expected = {
        "matches.csv", "tournament.csv", "btd_draws.csv", "strengths_fifa.csv", "strengths_btd.csv",
        "agreement.txt", "fifa_mismatches.txt", "forecasts.csv", "evaluation.csv", "report.txt",
        "figure_strengths.csv", "figure_differences.csv", "manifest.json",
        "diagnostics_btd.csv", "diagnostics_goal.csv",
    }
    assert expected <= files
    for model in ("double", "bivariate", "diag_inflated"):
        for source in ("fifa", "btd"):
            for stage in ("group", "knockout"):
                assert f"goal_{model}_{source}_{stage}_draws.csv" in files
    rows = list(csv.DictReader(io.StringIO((two_runs[0] / "evaluation.csv").read_text())))
    assert len(rows) == 4 * 2 * 2
    assert all(0.0 <= float(r["brier"]) <= 2.0 for r in rows)
    table = (two_runs[0] / "report.txt").read_text().splitlines()
    assert len(table) == 2 + 4


def test_convergence_diagnostics_cover_every_fit(two_runs):
    rows = list(csv.DictReader(io.StringIO((two_runs[0] / "diagnostics_goal.csv").read_text())))
    assert len(rows) == 3 * 2 * 2
    assert {r["passes_gate"] for r in rows} <= {"TRUE", "FALSE"}
    assert all(float(r["max_r_hat"]) >= 1.0 - 1e-6 and float(r["min_ess"]) > 0 for r in rows)
    (btd,) = csv.DictReader(io.StringIO((two_runs[0] / "diagnostics_btd.csv").read_text()))
    assert btd["fit"] == "btd"


def test_rerun_is_byte_identical(two_runs):
    first, second = (snapshot(out) for out in two_runs)
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], name


def test_manifest_records_hashes(two_runs):
    manifest = json.loads((two_runs[0] / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert len(manifest["config_sha256"]) == 64
    assert set(manifest["versions"]) >= {"btdfoot", "numpy", "scipy", "python"}
    files = snapshot(two_runs[0])
    for name, digest in manifest["files"].items():
        assert hashlib.sha256(files[name]).hexdigest() == digest


def test_missing_input_file_names_path(tmp_path, capsys):
    cfg = write_world(tmp_path, SMALL.replace("fifa.csv", "nowhere.csv"))
    assert cli.main(["run", "--config", str(cfg)]) != 0
    assert "nowhere.csv" in capsys.readouterr().err


def test_missing_config_and_bad_keys(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "absent.cfg")]) == 2
    assert "absent.cfg" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        parse_config_text(SMALL + "colour = blue\n")
    with pytest.raises(ConfigError):
        parse_config_text(SMALL.replace("train_start = 2018-01-01", "train_start = 2022-01-01"))
    with pytest.raises(ConfigError):
        parse_config_text(SMALL + "ranking = elo\n")


def test_predict_without_fit_is_dependency_error(tmp_path, capsys):
    cfg = write_world(tmp_path)
    assert cli.main(["ingest", "--config", str(cfg)]) == 0
    assert cli.main(["predict", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "run `" in err


def test_fit_btd_then_rank(tmp_path):
    cfg = write_world(tmp_path, SMALL + "models = logit\n")
    for step in ("ingest", "fit-btd", "rank"):
        assert cli.main([step, "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    text = (out / "strengths_btd.csv").read_text()
    rows = list(csv.reader(io.StringIO(text)))
    assert len(rows) > 8
    assert (out / "agreement.txt").is_file()


def test_rank_before_fit_btd_names_prior_step(tmp_path, capsys):
    cfg = write_world(tmp_path)
    assert cli.main(["ingest", "--config", str(cfg)]) == 0
    assert cli.main(["rank", "--config", str(cfg)]) == 2
    assert "fit-btd" in capsys.readouterr().err


def test_report_renders_six_by_four_table(tmp_path, capsys):
    cfg = write_world(tmp_path)
    out = tmp_path / "out"
    out.mkdir()
    assert cli.main(["ingest", "--config", str(cfg)]) == 0
    models = ["diag_inflated", "bivariate", "double", "rf", "xgb", "logit"]
    rng = np.random.default_rng(0)
    reports = [
        EvaluationReport(m, s, st, float(rng.uniform(0.5, 0.7)), 48)
        for m in models
        for st in ("group", "knockout")
        for s in ("fifa", "btd")
    ]
    (out / "evaluation.csv").write_text(evaluations_to_csv(reports))
    assert cli.main(["report", "--config", str(cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    body = lines[2:]
    assert len(body) == 6
    for line in body:
        cells = line.split()[-4:]
        assert len(cells) == 4
        assert all(0.5 <= float(c) <= 0.7 for c in cells)


def test_flags_override_environment_which_overrides_file(tmp_path, monkeypatch):
    cfg = write_world(tmp_path)
    seen = {}

    def fake_step(name, config):
        seen["seed"] = config.seed
        seen["models"] = config.models
        seen["out"] = config.out

    monkeypatch.setattr(cli, "run_step", fake_step)
    monkeypatch.setattr(cli, "write_manifest", lambda config: None)
    assert cli.main(["evaluate", "--config", str(cfg)]) == 0
    assert seen["seed"] == 7
    monkeypatch.setenv("BTDFOOT_SEED", "11")
    monkeypatch.setenv("BTDFOOT_MODELS", "double")
    assert cli.main(["evaluate", "--config", str(cfg)]) == 0
    assert (seen["seed"], seen["models"]) == (11, ("double",))
    assert cli.main(["evaluate", "--config", str(cfg), "--seed", "13", "--out", str(tmp_path / "elsewhere")]) == 0
    assert seen["seed"] == 13
    assert seen["out"] == (tmp_path / "elsewhere").resolve()
    monkeypatch.setenv("BTDFOOT_CONFIG", str(cfg))
    assert cli.main(["evaluate"]) == 0


def test_relative_paths_resolve_against_config(tmp_path):
    cfg = write_world(tmp_path)
    config = load_config(cfg)
    assert config.matches == tmp_path / "results.csv"
    assert config.sources == ("fifa", "btd")


def test_goal_parameter_export_layout():
    names = ["theta", "phi", "att[0,1]", "att[1,2]", "def[0,1]"]
    # pooled column k holds 5 * j + k for j = 0..5, median 12.5 + k
    draws = np.arange(2 * 3 * 5, dtype=float).reshape(2, 3, 5)
    effects, fixed = export_goal_parameters(PosteriorSample(draws, names), ["Ghana", "Mali"], 2019)
    assert effects.splitlines() == [
        "parameter,team,season,value",
        "att,Ghana,2019,14.5",
        "att,Mali,2020,15.5",
        "def,Ghana,2019,16.5",
    ]
    assert fixed.splitlines() == ["parameter,value", "theta,12.5", "phi,13.5"]
