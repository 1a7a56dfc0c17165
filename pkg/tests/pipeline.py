"""Runs every CLI subcommand into one directory tree."""

from __future__ import annotations

import json
from pathlib import Path

from tvsched.cli import run

GEN_CONFIG = {
    "span_hours": 2000, "viewer_count": 500, "base_probability": 0.2,
    "harmonics": [{"freq_per_day": 1.0, "amplitude": 0.04}, {"freq_per_day": 1 / 7, "amplitude": 0.02}],
    "noise_sigma": 0.005, "spike_rate": 0.015, "spike_magnitude": 0.05,
    "n_programs": 5, "program_hours": 3, "program_affinity_spread": 0.5,
}
DESK_CONFIG = {"n_channels": 1, "n_days": 2, "n_orders": 8}


def run_pipeline(root: Path, seed: int = 7) -> dict[str, int]:
    """Return the exit code of each step; outputs land under ``root``."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "gen.json").write_text(json.dumps(GEN_CONFIG))
    (root / "desk.json").write_text(json.dumps(DESK_CONFIG))
    v, d, s = root / "v", root / "d", str(seed)
    csv = str(v / "viewership.csv")
    steps = {
        "generate": ["generate", "--config", str(root / "gen.json"), "--seed", s, "-o", str(v)],
        "analyze": ["analyze", "--input", csv, "--seed", s, "-o", str(root / "a")],
        "forecast": ["forecast", "--input", csv, "--train-weeks", "8", "--seed", s, "-o", str(root / "f")],
        "forecast_knn1": ["forecast", "--input", csv, "--train-weeks", "8", "--method", "knn1",
                          "--seed", s, "-o", str(root / "f2")],
        "similarity": ["similarity", "--input", csv, "--pairs", "2000", "--predict", "3:20", "--k", "1",
                       "--seed", s, "-o", str(root / "s")],
        "generate_desk": ["generate", "--kind", "desk", "--config", str(root / "desk.json"),
                          "--seed", s, "-o", str(d)],
        "schedule": ["schedule", "--slots", str(d / "catalog.csv"), "--orders", str(d / "orders.json"),
                     "--forecasts", str(d / "forecast.json"), "--seed", s, "-o", str(d)],
        "schedule_greedy": ["schedule", "--slots", str(d / "catalog.csv"), "--orders", str(d / "orders.json"),
                            "--forecasts", str(d / "forecast.json"), "--mode", "greedy",
                            "--seed", s, "-o", str(root / "g")],
        "evaluate": ["evaluate", "--schedule", str(d / "schedule.csv"), "--panel", str(d / "panel.csv"),
                     "--orders", str(d / "orders.json"), "--seed", s, "-o", str(root / "e")],
        "evaluate_stationary": ["evaluate", "--schedule", str(d / "schedule.csv"), "--panel",
                                str(d / "panel.csv"), "--orders", str(d / "orders.json"), "--stationary",
                                "--seed", s, "-o", str(root / "e2")],
    }
    return {name: run(argv) for name, argv in steps.items()}


def output_files(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
