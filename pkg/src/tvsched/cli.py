"""Command-line entry point: ``tvsched <subcommand> [options]``.

Subcommands: generate, analyze, forecast, similarity, schedule, evaluate.
Each takes an optional JSON config (unknown keys rejected) whose values are
overridden by flags, writes its outputs into ``-o DIR`` and prints a one-line
summary. Exit status is 0 on success, 1 on a domain error (bad data,
infeasible request) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .forecast import (
    PairCondition,
    SlotKey,
    fit_model,
    knn1_predict,
    knn1_train,
    pairing_experiment,
    predict_new_program,
)
from .forecast.kalman import evaluate_slot
from .reach import (
    ReachError,
    TwoSlotOverlap,
    compress_stationary,
    estimate_overlap_from_panel,
    evaluate_schedule_reach,
    parse_slot_id,
)
from .scheduler import (
    UNSOLD,
    SchedulerError,
    SolverConfig,
    SolveReport,
    branch_and_bound,
    build_instance,
    check_feasible,
    desk_example,
    desk_inputs,
    fill_unsold,
    greedy_schedule,
    order_totals,
    revenue,
    triage_and_solve,
)
from .spectral import (
    FitError,
    SpectralError,
    detect_spikes,
    dft,
    filter_by_threshold,
    fit_exponential,
    fit_noise,
    ks_statistic_exponential,
    percentile_threshold,
    power_spectrum,
    weekly_profile,
)
from .viewdata import (
    CELL_CODES,
    DataError,
    GeneratorConfig,
    independent_panel,
    interpolate_missing,
    load_catalog,
    load_orders,
    load_panel,
    load_viewership,
    load_viewership_channels,
    observed_records,
    order_records,
    simulate,
    write_catalog,
    write_panel,
    write_viewership,
)
from .viewdata.io import format_hour
from .viewdata.model import cell_mask

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
SEED_ENV = "TVSCHED_SEED"
SCHEDULE_HEADER = ["channel_id", "slot_index", "timestamp", "order_id", "price"]

DOMAIN_ERRORS = (DataError, SchedulerError, ReachError, SpectralError, FitError, ValueError, OSError)


class UsageError(Exception):
    pass


# -- shared plumbing -----------------------------------------------------------

def _plain(obj: Any) -> Any:
    """JSON-ready copy: numpy scalars and arrays unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def config_hash(config: dict) -> str:
    text = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _meta(command: str, seed: int, config: dict) -> dict:
    return {"tool": "tvsched", "version": __version__, "command": command,
            "seed": seed, "config_sha256": config_hash(config)}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_plain(payload), indent=2, allow_nan=False) + "\n")


def _load_json(path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def _resolve_config(args, defaults: dict, flags: dict) -> dict:
    """Defaults, then the config file, then explicit flags; unknown file keys are an error."""
    cfg = dict(defaults)
    if args.config is not None:
        raw = _load_json(args.config)
        if not isinstance(raw, dict):
            raise DataError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(raw) - set(defaults))
        if unknown:
            raise DataError(f"{args.config}: unknown config keys {unknown}")
        cfg.update(raw)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def _resolve_seed(args, config_seed: int | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_dow_hour(text: str) -> tuple[int, int]:
    try:
        d, h = text.split(":")
        key = SlotKey("", int(d), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected DOW:HH with DOW 0-6 and HH 0-23, got {text!r}") from None
    return key.day_of_week, key.hour_of_day


def _cell_list(text: str | None):
    if text is None:
        return None
    codes = [c.strip() for c in text.split(",") if c.strip()]
    return codes or None


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(x: float) -> str:
    return repr(float(x))


# -- generate ------------------------------------------------------------------

DESK_DEFAULTS = {"n_channels": 3, "n_days": 5, "n_hours": 19, "n_orders": 49, "first_hour": 5,
                 "demand": 1.25, "start": "2014-10-27T00:00", "forbid_fraction": 0.0,
                 "panel_viewers": 20_000, "panel_reach": 0.3}


def _desk_panel(inputs, viewers: int, reach: float, seed: int):
    totals = inputs.cell_impressions.sum(axis=1)
    top = totals.max() if totals.size and totals.max() > 0 else 1.0
    q = np.clip(reach * totals / top, 0.0, 1.0)
    return independent_panel([s.slot_id for s in inputs.catalog.slots], q, viewers, seed)


def _forecast_entry(channel: str, dow: int, hour: int, mean: float, variance, cells) -> dict:
    return {"channel_id": channel, "slot": f"{dow}:{hour:02d}", "day_of_week": dow, "hour": hour,
            "mean": mean, "variance": variance, "cells": list(cells)}


def cmd_generate(args) -> str:
    out = _out_dir(args)
    if args.kind == "viewership":
        cfg = _resolve_config(args, GeneratorConfig().to_dict(), {})
        seed = _resolve_seed(args)
        gen = GeneratorConfig.from_dict(cfg)
        data = simulate(gen, seed)
        meta = _meta("generate", seed, {"kind": args.kind, **gen.to_dict()})
        write_viewership(out / "viewership.csv", data.series)
        write_panel(out / "panel.csv", data.panel)
        _write_json(out / "truth.json", {
            "meta": meta,
            "config": gen.to_dict(),
            "spike_onsets": data.spike_onsets,
            "periodic": data.periodic,
        })
        return (f"generate: {gen.span_hours} hours on channel {gen.channel_id}, "
                f"{data.panel.viewer_count} panel viewers -> {out}")

    defaults = DESK_DEFAULTS if args.kind == "desk" else {
        k: DESK_DEFAULTS[k] for k in ("panel_viewers", "panel_reach")}
    cfg = _resolve_config(args, defaults, {})
    seed = _resolve_seed(args)
    if args.kind == "desk":
        if not 1 <= int(cfg["n_days"]) <= 7:
            raise DataError("n_days must lie in 1..7 so each slot has its own weekly forecast")
        gen = {k: cfg[k] for k in DESK_DEFAULTS if not k.startswith("panel_")}
        inputs = desk_inputs(seed, **gen)
    else:
        inputs = desk_example()
    meta = _meta("generate", seed, {"kind": args.kind, **cfg})
    write_catalog(out / "catalog.csv", inputs.catalog)
    _write_json(out / "orders.json", {"meta": meta, "orders": order_records(inputs.orders)})
    slots = [_forecast_entry(s.channel_id, s.timestamp.weekday(), s.timestamp.hour,
                             float(c.sum()), None, c)
             for s, c in zip(inputs.catalog.slots, inputs.cell_impressions)]
    _write_json(out / "forecast.json", {"meta": meta, "method": "generated", "slots": slots})
    panel = _desk_panel(inputs, int(cfg["panel_viewers"]), float(cfg["panel_reach"]), seed)
    write_panel(out / "panel.csv", panel)
    return (f"generate: {len(inputs.catalog.slots)} slots, {len(inputs.orders)} orders, "
            f"{panel.viewer_count} panel viewers -> {out}")


# -- analyze -------------------------------------------------------------------

ANALYZE_DEFAULTS = {"channel": None, "cells": None, "threshold": None, "threshold_percentile": 99.0,
                    "spike_percentile": 95.0, "spikes_on": "raw"}


def cmd_analyze(args) -> str:
    cfg = _resolve_config(args, ANALYZE_DEFAULTS, {
        "channel": args.channel, "cells": _cell_list(args.cells), "threshold": args.threshold,
        "threshold_percentile": args.threshold_percentile,
        "spike_percentile": args.spike_percentile, "spikes_on": args.spikes_on})
    if args.threshold is not None:
        cfg["threshold_percentile"] = None
    if cfg["spikes_on"] not in ("raw", "noise"):
        raise DataError("spikes_on must be 'raw' or 'noise'")
    seed = _resolve_seed(args)
    out = _out_dir(args)
    series = interpolate_missing(load_viewership(args.input, cfg["channel"]))
    mask = None if cfg["cells"] is None else cell_mask(cfg["cells"])
    x = series.totals(mask)
    spectrum = dft(x)
    if cfg["threshold"] is not None:
        a_thresh = float(cfg["threshold"])
    elif cfg["threshold_percentile"] is not None:
        a_thresh = percentile_threshold(spectrum, float(cfg["threshold_percentile"]))
    else:
        raise DataError("set either threshold or threshold_percentile")
    split = filter_by_threshold(spectrum, a_thresh)
    meta = _meta("analyze", seed, cfg)

    _write_rows(out / "spectrum.csv", ["freq_per_day", "magnitude"],
                [(_num(f), _num(a)) for f, a in power_spectrum(spectrum)])
    _write_rows(out / "filtered.csv", ["t", "signal", "noise"],
                [(t, _num(s), _num(n)) for t, (s, n) in enumerate(zip(split.signal, split.noise))])
    start = series.start
    profile = weekly_profile(x, start.weekday() * 24 + start.hour)
    _write_rows(out / "weekly.csv", ["hour_of_week", "median", "p5", "p95"],
                [(h, *(_num(v) for v in row)) for h, row in enumerate(profile)])

    fit = fit_noise(split.noise)
    _write_json(out / "noisefit.json", {
        "meta": meta,
        "threshold": a_thresh,
        "kept_modes": split.kept_mode_count,
        "normal": {"mu": fit.normal.mu, "sigma": fit.normal.sigma},
        "tls": {"mu": fit.tls.mu, "sigma": fit.tls.sigma, "nu": fit.tls.nu},
        "log_likelihoods": fit.log_likelihoods,
    })

    target = split.noise if cfg["spikes_on"] == "noise" else x
    spikes = detect_spikes(target, percentile=float(cfg["spike_percentile"]))
    lam = ks = None
    if spikes.waiting_times.size >= 2:
        lam = fit_exponential(spikes.waiting_times)
        ks = ks_statistic_exponential(spikes.waiting_times, lam)
    _write_json(out / "spikes.json", {
        "meta": meta,
        "series": cfg["spikes_on"],
        "threshold": spikes.threshold_value,
        "times": spikes.spike_times,
        "waiting_times": spikes.waiting_times,
        "lambda_hat": lam,
        "ks_statistic": ks,
    })
    lam_txt = "n/a" if lam is None else f"{lam:.4g}/h"
    return (f"analyze: {x.size} hours, {split.kept_mode_count} modes above {a_thresh:.6g}, "
            f"{spikes.spike_times.size} spikes (lambda {lam_txt}) -> {out}")


# -- forecast ------------------------------------------------------------------

FORECAST_DEFAULTS = {"method": "kalman", "train_weeks": 20, "channel": None, "slots": None}


def _weekly_history(series):
    """Per (day, hour): totals in time order, per-cell count sums and week numbers."""
    t0 = series.start
    values: dict[tuple[int, int], list[float]] = {}
    cells: dict[tuple[int, int], np.ndarray] = {}
    rows = []
    for r in series.records:
        key = (r.day_of_week, r.hour)
        week = int((r.timestamp - t0).total_seconds() // (168 * 3600))
        values.setdefault(key, []).append(float(r.total))
        cells[key] = cells.get(key, 0) + r.impressions.astype(float)
        rows.append((week, r.program_id, r.day_of_week, r.hour, float(r.total)))
    return values, cells, rows


def _shares(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    return counts / total if total > 0 else np.full(counts.size, 1.0 / counts.size)


def _per_day(errors: dict[int, list[float]]) -> list[dict]:
    out = []
    for d in sorted(errors):
        e = np.asarray(errors[d])
        out.append({"day_of_week": d, "predictions": int(e.size),
                    "rms_relative_error": float(np.sqrt(np.mean(e ** 2)))})
    return out


def cmd_forecast(args) -> str:
    cfg = _resolve_config(args, FORECAST_DEFAULTS, {
        "method": args.method, "train_weeks": args.train_weeks, "channel": args.channel,
        "slots": None if not args.slot else [f"{d}:{h:02d}" for d, h in args.slot]})
    if cfg["method"] not in ("kalman", "knn1"):
        raise DataError("method must be 'kalman' or 'knn1'")
    train_weeks = int(cfg["train_weeks"])
    if train_weeks < 2:
        raise DataError("train_weeks must be at least 2")
    wanted = None
    if cfg["slots"] is not None:
        try:
            wanted = {_parse_dow_hour(s) for s in cfg["slots"]}
        except argparse.ArgumentTypeError as exc:
            raise DataError(str(exc)) from None
    seed = _resolve_seed(args)
    out = _out_dir(args)
    series = interpolate_missing(load_viewership(args.input, cfg["channel"]))
    channel = series.channel_id
    values, cells, rows = _weekly_history(series)
    keys = sorted(values if wanted is None else [k for k in values if k in wanted])
    if wanted is not None and len(keys) < len(wanted):
        missing = sorted(wanted - set(values))[0]
        raise DataError(f"{args.input}: no history at slot {missing[0]}:{missing[1]:02d}")

    errors: dict[int, list[float]] = {}
    entries = []
    extra: dict[str, Any] = {}
    if cfg["method"] == "kalman":
        for key in keys:
            if len(values[key]) > train_weeks:
                ev = evaluate_slot(values[key], train_weeks)
                errors.setdefault(key[0], []).extend(ev.relative_errors.tolist())
        model = fit_model({SlotKey(channel, *k): values[k] for k in keys}, train_weeks)
        extra["obs_sigma"] = model.obs_sigma
        for key in keys:
            b = model.beliefs[SlotKey(channel, *key)]
            entries.append(_forecast_entry(channel, *key, b.mean, b.variance, b.mean * _shares(cells[key])))
    else:
        train = [(p, d, h, y) for w, p, d, h, y in rows if w < train_weeks]
        test = [(p, d, h, y) for w, p, d, h, y in rows if w >= train_weeks and (d, h) in keys]
        if not train:
            raise DataError("no observations inside the training weeks")
        m = knn1_train(train)
        for p, d, h, y in test:
            if y > 0:
                errors.setdefault(d, []).append((knn1_predict(m, (p, d, h)) - y) / y)
        full = knn1_train([(p, d, h, y) for _, p, d, h, y in rows])
        last_program = {(d, h): p for _, p, d, h, _ in rows}
        for key in keys:
            mean = knn1_predict(full, (last_program[key], *key))
            entries.append(_forecast_entry(channel, *key, mean, None, mean * _shares(cells[key])))

    per_day = _per_day(errors)
    _write_json(out / "forecast.json", {
        "meta": _meta("forecast", seed, cfg),
        "method": cfg["method"],
        "channel_id": channel,
        "train_weeks": train_weeks,
        "cell_codes": list(CELL_CODES),
        **extra,
        "per_day": per_day,
        "slots": entries,
    })
    worst = max((d["rms_relative_error"] for d in per_day), default=float("nan"))
    return (f"forecast: {cfg['method']} on channel {channel}, {len(entries)} slots, "
            f"worst per-day RMS relative error {worst:.4f} -> {out}")


# -- similarity ----------------------------------------------------------------

SIMILARITY_DEFAULTS = {"pairs": 100_000, "conditions": [c.value for c in PairCondition],
                       "channel": None, "predict": None, "k": 3}


def cmd_similarity(args) -> str:
    cfg = _resolve_config(args, SIMILARITY_DEFAULTS, {
        "pairs": args.pairs, "conditions": args.condition or None, "channel": args.channel,
        "predict": None if args.predict is None else f"{args.predict[0]}:{args.predict[1]:02d}",
        "k": args.k})
    seed = _resolve_seed(args)
    out = _out_dir(args)
    channels = load_viewership_channels(args.input)
    if cfg["channel"] is not None:
        if cfg["channel"] not in channels:
            raise DataError(f"{args.input}: channel {cfg['channel']!r} not present")
        channels = {cfg["channel"]: channels[cfg["channel"]]}
    records = observed_records(channels[c] for c in sorted(channels))
    results = {}
    for name in cfg["conditions"]:
        cond = PairCondition(name)
        results[cond.value] = pairing_experiment(records, int(cfg["pairs"]), cond, seed)
    payload: dict[str, Any] = {"meta": _meta("similarity", seed, cfg), "pairs": int(cfg["pairs"]),
                               "records": len(records), "mean_distance": results}
    if cfg["predict"] is not None:
        try:
            target = _parse_dow_hour(cfg["predict"])
        except argparse.ArgumentTypeError as exc:
            raise DataError(str(exc)) from None
        pred = predict_new_program(target, records, int(cfg["k"]))
        payload["prediction"] = {"slot": cfg["predict"], "k": int(cfg["k"]), "programs": pred.programs,
                                 "total": pred.total, "cells": pred.impressions,
                                 "profile": pred.profile.ratios}
    _write_json(out / "similarity.json", payload)
    body = ", ".join(f"{k} {v:.4f}" for k, v in results.items())
    return f"similarity: {len(records)} records, mean distance {body} -> {out}"


# -- schedule ------------------------------------------------------------------

def _forecast_cells(path) -> dict[tuple[str, int, int], np.ndarray]:
    raw = _load_json(path)
    if not isinstance(raw, dict) or not isinstance(raw.get("slots"), list):
        raise DataError(f"{path}: expected an object with a 'slots' array")
    table = {}
    for k, item in enumerate(raw["slots"]):
        try:
            key = (str(item["channel_id"]), int(item["day_of_week"]), int(item["hour"]))
            cells = np.asarray(item["cells"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: slot entry #{k}: {exc}") from None
        if cells.shape != (len(CELL_CODES),) or not np.isfinite(cells).all() or (cells < 0).any():
            raise DataError(f"{path}: slot entry #{k}: cells must be {len(CELL_CODES)} non-negative numbers")
        if key in table:
            raise DataError(f"{path}: duplicate forecast for channel {key[0]} day {key[1]} hour {key[2]}")
        table[key] = cells
    return table


def _greedy_report(instance, t0: float) -> SolveReport:
    sched, satisfied, removed = greedy_schedule(instance)
    sched = fill_unsold(instance, sched, satisfied)
    rev = revenue(instance, sched)
    return SolveReport(
        schedule=sched, revenue=rev,
        accepted=tuple(instance.order_ids[a] for a in satisfied),
        rejected={instance.order_ids[a]: "greedy" for a in removed},
        lp_upper_bound=np.nan, best_bound=np.nan, nodes_explored=0,
        wall_time=time.perf_counter() - t0, status="heuristic", rounds=1)


def cmd_schedule(args) -> str:
    defaults = SolverConfig().to_dict()
    cfg = _resolve_config(args, defaults, {"seed": args.seed})
    cfg["seed"] = _resolve_seed(args, cfg["seed"] if args.config is not None or args.seed is not None else None)
    solver = SolverConfig.from_dict(cfg)
    out = _out_dir(args)
    catalog = load_catalog(args.slots)
    orders = load_orders(args.orders)
    table = _forecast_cells(args.forecasts)
    cells = []
    for s in catalog.slots:
        key = (s.channel_id, s.timestamp.weekday(), s.timestamp.hour)
        if key not in table:
            raise DataError(f"{args.forecasts}: no forecast for slot {s.slot_id} "
                            f"(channel {key[0]}, day {key[1]}, hour {key[2]:02d})")
        cells.append(table[key])
    instance = build_instance(catalog, orders, np.array(cells).reshape(len(cells), len(CELL_CODES)))

    t0 = time.perf_counter()
    if args.mode == "triage":
        rep = triage_and_solve(instance, solver, jobs=args.jobs)
    elif args.mode == "bnb":
        rep = branch_and_bound(instance, config=solver)
    else:
        rep = _greedy_report(instance, t0)
    elapsed = time.perf_counter() - t0
    check = check_feasible(instance, rep.schedule)
    if not check.feasible:
        raise SchedulerError("solver returned an infeasible schedule: " + "; ".join(check.violations()))

    assign = rep.schedule.assignment
    _write_rows(out / "schedule.csv", SCHEDULE_HEADER, [
        (s.channel_id, s.slot_index, format_hour(s.timestamp),
         "" if assign[k] == UNSOLD else instance.order_ids[assign[k]], _num(s.price))
        for k, s in enumerate(catalog.slots)])

    spend, imp = order_totals(instance, rep.schedule)
    per_order = []
    for a, oid in enumerate(instance.order_ids):
        per_order.append({
            "order_id": oid, "spend": spend[a], "impressions": imp[a],
            "budget": instance.budgets[a], "target_impressions": instance.targets[a],
            "slots": int((assign == a).sum()), "accepted": oid in rep.accepted,
            "rejected_reason": rep.rejected.get(oid), "value": rep.order_values.get(oid)})
    payload = {
        "meta": _meta("schedule", solver.seed, {"mode": args.mode, **solver.to_dict()}),
        "mode": args.mode,
        "status": rep.status,
        "revenue": rep.revenue,
        "lp_upper_bound": rep.lp_upper_bound,
        "best_bound": rep.best_bound,
        "gap": rep.gap if np.isfinite(rep.best_bound) else None,
        "nodes": rep.nodes_explored,
        "rounds": rep.rounds,
        "accepted": list(rep.accepted),
        "rejected": rep.rejected,
        "orders": per_order,
    }
    if args.timing:
        payload["wall_time"] = elapsed
    _write_json(out / "report.json", payload)
    return (f"schedule: revenue {rep.revenue:.6g} ({rep.status}), {len(rep.accepted)} accepted, "
            f"{len(rep.rejected)} rejected, {rep.nodes_explored} nodes, {elapsed:.2f} s -> {out}")


# -- evaluate ------------------------------------------------------------------

EVALUATE_DEFAULTS = {"stationary": False, "s_sigma": "poisson"}


def load_schedule(path) -> dict[str, list[str]]:
    """Order id -> aired slot ids, from a schedule CSV."""
    path = Path(path)
    aired: dict[str, list[str]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != SCHEDULE_HEADER:
            raise DataError(f"{path}:1: header must be {','.join(SCHEDULE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCHEDULE_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(SCHEDULE_HEADER)} fields")
            try:
                index = int(row[1])
                datetime.fromisoformat(row[2])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if row[3].strip():
                aired.setdefault(row[3].strip(), []).append(f"{row[0].strip()}:{index}")
    return aired


def cmd_evaluate(args) -> str:
    cfg = _resolve_config(args, EVALUATE_DEFAULTS, {"stationary": True if args.stationary else None})
    if cfg["s_sigma"] not in ("poisson", "none"):
        raise DataError("s_sigma must be 'poisson' or 'none'")
    stationary = bool(cfg["stationary"])
    seed = _resolve_seed(args)
    out = _out_dir(args)
    aired = load_schedule(args.schedule)
    panel = load_panel(args.panel)
    orders = {o.order_id: o for o in load_orders(args.orders)}
    unknown = sorted(set(aired) - set(orders))
    if unknown:
        raise DataError(f"{args.schedule}: order {unknown[0]} is not in {args.orders}")

    by_channel: dict[str, list[str]] = {}
    for sid in panel.slot_ids:
        by_channel.setdefault(parse_slot_id(sid)[0], []).append(sid)
    overlaps: dict[str, TwoSlotOverlap] = {}
    for ch, ids in by_channel.items():
        ov = estimate_overlap_from_panel(panel, sorted(ids, key=lambda s: parse_slot_id(s)[1]))
        overlaps[ch] = ov.with_lag(compress_stationary(ov)) if stationary else ov
    S = {sid: float(panel.audience(sid).size) for sid in panel.slot_ids}
    S_sigma = {sid: (math.sqrt(v) if cfg["s_sigma"] == "poisson" else 0.0) for sid, v in S.items()}

    results = []
    met = 0
    for oid in sorted(orders):
        order = orders[oid]
        slots = aired.get(oid, [])
        for sid in slots:
            if sid not in S:
                raise DataError(f"{args.schedule}: order {oid}: slot {sid} is not in the panel")
        if not slots:
            results.append({"order_id": oid, "slots": [], "I": 0.0, "R_exact": 0.0, "R_estimate": 0.0,
                            "F": None, "F_exact": None, "sigma_R": 0.0, "sigma_F": None,
                            "reach_target": order.reach_target,
                            "target_met_mean": None if order.reach_target is None else order.reach_target <= 0,
                            "target_met_2sigma": None if order.reach_target is None else order.reach_target <= 0})
            continue
        try:
            r = evaluate_schedule_reach(oid, slots, S, overlaps, order.reach_target, S_sigma,
                                        panel, stationary)
        except ReachError as exc:
            raise ReachError(f"order {oid}: {exc}") from None
        est, ex = r.estimate, r.exact
        met += bool(r.target_met_2sigma)
        results.append({"order_id": oid, "slots": slots, "I": est.impressions, "R_exact": ex.reach,
                        "R_estimate": est.reach, "F": est.frequency, "F_exact": ex.frequency,
                        "sigma_R": est.sigma_R, "sigma_F": est.sigma_F, "reach_target": r.reach_target,
                        "target_met_mean": r.target_met_mean, "target_met_2sigma": r.target_met_2sigma})
    _write_json(out / "reach.json", {
        "meta": _meta("evaluate", seed, cfg),
        "stationary": stationary,
        "s_sigma": cfg["s_sigma"],
        "orders": results,
    })
    aired_n = sum(1 for r in results if r["slots"])
    return f"evaluate: {aired_n} of {len(results)} orders aired, {met} meet reach at 2 sigma -> {out}"


# -- argument parsing ----------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config for this subcommand (flags override it)")
    common.add_argument("--seed", type=int, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("-o", "--out", required=True, help="output directory")
    common.add_argument("--jobs", type=_positive_int, default=1, help="cap on worker threads")

    p = argparse.ArgumentParser(prog="tvsched", description="TV viewership forecasting and ad scheduling.")
    p.add_argument("--version", action="version", version=f"tvsched {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    g = sub.add_parser("generate", parents=[common], help="write synthetic viewership or desk inputs")
    g.add_argument("--kind", choices=["viewership", "desk", "desk-example"], default="viewership")

    a = sub.add_parser("analyze", parents=[common], help="spectral split, noise fits, spikes")
    a.add_argument("--input", required=True, help="viewership CSV")
    a.add_argument("--channel")
    a.add_argument("--cells", help="comma-separated demographic cell codes (default: all)")
    thr = a.add_mutually_exclusive_group()
    thr.add_argument("--threshold", type=float, help="absolute mode-amplitude threshold")
    thr.add_argument("--threshold-percentile", type=float, help="threshold as a percentile of amplitudes")
    a.add_argument("--spike-percentile", type=float)
    a.add_argument("--spikes-on", choices=["raw", "noise"])

    f = sub.add_parser("forecast", parents=[common], help="per-slot forecasts with held-out errors")
    f.add_argument("--input", required=True, help="viewership CSV")
    f.add_argument("--method", choices=["kalman", "knn1"])
    f.add_argument("--train-weeks", type=int)
    f.add_argument("--slot", type=_parse_dow_hour, action="append", help="DOW:HH, repeatable")
    f.add_argument("--channel")

    s = sub.add_parser("similarity", parents=[common], help="demographic similarity experiment")
    s.add_argument("--input", required=True, help="viewership CSV")
    s.add_argument("--pairs", type=_positive_int)
    s.add_argument("--condition", action="append", choices=[c.value for c in PairCondition])
    s.add_argument("--channel")
    s.add_argument("--predict", type=_parse_dow_hour, help="DOW:HH for a new-program prediction")
    s.add_argument("--k", type=_positive_int)

    c = sub.add_parser("schedule", parents=[common], help="revenue-maximizing schedule")
    c.add_argument("--slots", required=True, help="slot catalog CSV")
    c.add_argument("--orders", required=True, help="orders JSON")
    c.add_argument("--forecasts", required=True, help="forecast JSON")
    c.add_argument("--mode", choices=["triage", "bnb", "greedy"], default="triage")
    c.add_argument("--timing", action="store_true", help="record wall time in report.json")

    e = sub.add_parser("evaluate", parents=[common], help="reach and frequency of a schedule")
    e.add_argument("--schedule", required=True, help="schedule CSV")
    e.add_argument("--panel", required=True, help="panel CSV")
    e.add_argument("--orders", required=True, help="orders JSON")
    e.add_argument("--stationary", action="store_true", help="use lag-averaged overlaps")
    return p


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "forecast": cmd_forecast,
    "similarity": cmd_similarity,
    "schedule": cmd_schedule,
    "evaluate": cmd_evaluate,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        summary = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tvsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DOMAIN_ERRORS as exc:
        print(f"tvsched {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
