from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tvsched import __version__
from tvsched.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, SEED_ENV, config_hash, run
from tvsched.viewdata import interpolate_missing, load_viewership

from pipeline import output_files, run_pipeline


@pytest.fixture(scope="module")
def tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    codes = run_pipeline(root)
    return root, codes


def read_json(path):
    return json.loads(path.read_text())


def test_every_step_succeeds(tree):
    _, codes = tree
    assert codes == {k: EXIT_OK for k in codes}


def test_meta_block(tree):
    root, _ = tree
    for name in ["v/truth.json", "a/noisefit.json", "f/forecast.json", "s/similarity.json",
                 "d/report.json", "e/reach.json"]:
        meta = read_json(root / name)["meta"]
        assert meta["version"] == __version__ and meta["seed"] == 7
        assert len(meta["config_sha256"]) == 64


def test_config_hash_is_order_free():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_analyze_reconstructs_input(tree):
    root, _ = tree
    with open(root / "a" / "filtered.csv") as fh:
        rows = list(csv.DictReader(fh))
    series = load_viewership(root / "v" / "viewership.csv")
    total = np.array([float(r["signal"]) + float(r["noise"]) for r in rows])
    want = interpolate_missing(series).totals()
    assert np.max(np.abs(total - want)) <= 1e-9 * max(1.0, np.max(np.abs(want)))


def test_schedule_report_consistent(tree):
    root, _ = tree
    report = read_json(root / "d" / "report.json")
    with open(root / "d" / "schedule.csv") as fh:
        rows = list(csv.DictReader(fh))
    sold = sum(float(r["price"]) for r in rows if r["order_id"])
    assert sold == pytest.approx(report["revenue"])
    assert "wall_time" not in report
    for o in report["orders"]:
        assert o["spend"] <= o["budget"] + 1e-9
        if o["accepted"]:
            assert o["impressions"] >= o["target_impressions"] - 1e-9
    greedy = read_json(root / "g" / "report.json")
    assert greedy["status"] == "heuristic" and greedy["revenue"] <= report["revenue"]


def test_reach_report(tree):
    root, _ = tree
    for o in read_json(root / "e" / "reach.json")["orders"]:
        if o["slots"]:
            assert o["R_estimate"] <= o["I"] + 1e-9 and o["R_exact"] <= o["I"]
            assert o["F"] >= 1 - 1e-12


def test_desk_example_revenue(tmp_path):
    assert run(["generate", "--kind", "desk-example", "-o", str(tmp_path)]) == EXIT_OK
    code = run(["schedule", "--slots", str(tmp_path / "catalog.csv"), "--orders", str(tmp_path / "orders.json"),
                "--forecasts", str(tmp_path / "forecast.json"), "--mode", "bnb", "--timing", "-o", str(tmp_path)])
    report = read_json(tmp_path / "report.json")
    assert code == EXIT_OK and report["revenue"] == 30 and "wall_time" in report
    assert {o["order_id"]: o["accepted"] for o in report["orders"]} == {"A": True, "B": False}


def test_same_seed_same_bytes(tmp_path):
    run_pipeline(tmp_path / "one")
    run_pipeline(tmp_path / "two")
    one, two = output_files(tmp_path / "one"), output_files(tmp_path / "two")
    assert one.keys() == two.keys() and all(one[k] == two[k] for k in one)


def test_seed_from_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "gen.json"
    cfg.write_text(json.dumps({"span_hours": 300, "viewer_count": 50}))
    monkeypatch.setenv(SEED_ENV, "11")
    assert run(["generate", "--config", str(cfg), "-o", str(tmp_path / "env")]) == EXIT_OK
    monkeypatch.delenv(SEED_ENV)
    assert run(["generate", "--config", str(cfg), "--seed", "11", "-o", str(tmp_path / "flag")]) == EXIT_OK
    assert read_json(tmp_path / "env" / "truth.json")["meta"]["seed"] == 11
    assert (tmp_path / "env" / "panel.csv").read_bytes() == (tmp_path / "flag" / "panel.csv").read_bytes()


def test_bad_seed_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "seven")
    assert run(["generate", "--kind", "desk-example", "-o", str(tmp_path)]) == EXIT_USAGE


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    assert run(["generate", "--bogus", "-o", str(tmp_path)]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_and_args(capsys):
    assert run([]) == EXIT_USAGE
    assert run(["schedule", "-o", "x"]) == EXIT_USAGE
    assert run(["nope"]) == EXIT_USAGE


def test_help_exits_zero(capsys):
    assert run(["--help"]) == EXIT_OK


def test_unknown_config_key_is_domain_error(tmp_path, capsys):
    cfg = tmp_path / "gen.json"
    cfg.write_text(json.dumps({"span_hour": 10}))
    assert run(["generate", "--config", str(cfg), "-o", str(tmp_path)]) == EXIT_DOMAIN
    assert "span_hour" in capsys.readouterr().err


def test_bad_input_file_is_domain_error(tmp_path, capsys):
    bad = tmp_path / "v.csv"
    bad.write_text("timestamp,channel_id\n")
    assert run(["analyze", "--input", str(bad), "-o", str(tmp_path)]) == EXIT_DOMAIN
    assert capsys.readouterr().err.startswith("tvsched analyze: error:")


def test_console_script_runs(tmp_path):
    out = subprocess.run([sys.executable, "-c", "from tvsched.cli import main; main()",
                          "generate", "--kind", "desk-example", "-o", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("generate:")
