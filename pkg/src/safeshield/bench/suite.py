"""Suite execution: seed sweeps over safeguard variants, reports, plots.

Seeds run as independent jobs (process-parallel when SAFESHIELD_THREADS
allows); the aggregator is a single consumer.  The summary CSV carries
only deterministic metrics, so identical configs produce byte-identical
files; wall-clock data goes into the separate overhead report.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..gradnet import save_checkpoint
from ..shac import train
from .config import (REFERENCE_REWARD, ExperimentConfig, Variant, build_env,
                     build_runner, load_config, variant_train_config)
from .metrics import RunRecord, SummaryTable, aggregate, bootstrap_ci
from .svgplot import line_plot


def run_single(cfg: ExperimentConfig, variant: Variant, seed: int,
               out_dir: Path) -> RunRecord:
    """One training run; writes the JSONL log, metadata, and checkpoint."""
    env = build_env(cfg)
    runner = build_runner(cfg, env, variant)
    tcfg = variant_train_config(cfg, variant, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = train(env, runner, tcfg,
                log_path=out_dir / f"seed{seed}.jsonl")
    meta = {
        "variant": variant.name, "safeguard": variant.safeguard,
        "seed": seed, "violations": log.violations,
        "env_steps": log.env_steps, "wall_s": log.wall_s,
        "interventions_per_step": (runner.interventions / max(runner.steps, 1)
                                   if runner else 0.0),
    }
    (out_dir / f"seed{seed}.meta.json").write_text(
        json.dumps(meta, sort_keys=True))
    if log.final_actor is not None:
        save_checkpoint(out_dir / f"seed{seed}.actor.ckpt", log.final_actor,
                        {"kind": "actor", "env": cfg.env, "seed": seed})
    return RunRecord(variant=variant.name, seed=seed, records=log.records,
                     violations=log.violations, env_steps=log.env_steps,
                     wall_s=log.wall_s,
                     interventions_per_step=meta["interventions_per_step"])


def _job(config_path: str, variant_name: str, seed: int, out_root: str):
    cfg = load_config(config_path)
    variant = next(v for v in cfg.variants if v.name == variant_name)
    out = Path(out_root) / "runs" / variant_name
    rec = run_single(cfg, variant, seed, out)
    return (variant_name, seed, rec.records, rec.violations, rec.env_steps,
            rec.wall_s, rec.interventions_per_step)


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SAFESHIELD_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(config_path, out_root=None) -> SummaryTable:
    """Execute every (variant, seed) job and aggregate to the summary table."""
    cfg = load_config(config_path)
    out_root = Path(out_root if out_root is not None else cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = [(v.name, s) for v in cfg.variants for s in cfg.seeds]
    results: dict[tuple, RunRecord] = {}
    workers = _max_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_job, str(config_path), vn, s, str(out_root)):
                    (vn, s) for vn, s in jobs}
            for fut, key in futs.items():
                vn, s, recs, viol, steps, wall, ips = fut.result()
                results[key] = RunRecord(vn, s, recs, viol, steps, wall, ips)
    else:
        for vn, s in jobs:
            variant = next(v for v in cfg.variants if v.name == vn)
            results[(vn, s)] = run_single(cfg, variant, s,
                                          out_root / "runs" / vn)

    table = SummaryTable()
    for v in cfg.variants:
        runs = [results[(v.name, s)] for s in cfg.seeds]
        ref = REFERENCE_REWARD.get((cfg.env, v.safeguard))
        table.rows.append(aggregate(v.name, runs, cfg.floor, reference=ref))
    (out_root / "summary.csv").write_text(table.to_csv())
    _write_overhead(cfg, results, out_root)
    _write_curves(cfg, results, out_root)
    return table


def overhead_report(cfg: ExperimentConfig, results: dict) -> dict:
    """Wall-clock ratio of each safeguarded variant over the unsafe baseline.

    Ratios are per environment step at a fixed step count; hardware and
    implementation dependent, reported as a metric rather than asserted.
    """
    per_step = {}
    for v in cfg.variants:
        runs = [results[(v.name, s)] for s in cfg.seeds]
        steps = sum(r.env_steps for r in runs)
        per_step[v.name] = (sum(r.wall_s for r in runs) / steps
                            if steps else np.nan)
    base = next((v.name for v in cfg.variants if v.safeguard == "none"), None)
    ratios = {}
    if base is not None and np.isfinite(per_step[base]) and per_step[base] > 0:
        for name, val in per_step.items():
            ratios[name] = val / per_step[base]
    return {"seconds_per_step": per_step, "ratio_vs_unsafe": ratios}


def _write_overhead(cfg, results, out_root: Path) -> None:
    (out_root / "overhead.json").write_text(
        json.dumps(overhead_report(cfg, results), sort_keys=True, indent=2))


def _write_curves(cfg, results, out_root: Path) -> None:
    series = []
    for v in cfg.variants:
        runs = [results[(v.name, s)] for s in cfg.seeds]
        steps = [rec["step"] for rec in runs[0].records]
        curves = np.array([[rec["eval_reward_mean"] for rec in r.records]
                           for r in runs])
        mean = curves.mean(axis=0)
        los, his = [], []
        for j in range(curves.shape[1]):
            lo, hi = bootstrap_ci(curves[:, j])
            los.append(lo)
            his.append(hi)
        series.append({"label": v.name, "x": steps, "y": mean,
                       "band": (los, his)})
    svg = line_plot(series, f"{cfg.name}: evaluation reward",
                    "environment steps", "mean episodic reward")
    (out_root / "learning_curves.svg").write_text(svg)


def report_from_runs(runs_dir) -> SummaryTable:
    """Rebuild the summary table from per-run JSONL + metadata files."""
    runs_dir = Path(runs_dir)
    records: dict[str, list[RunRecord]] = {}
    for meta_path in sorted(runs_dir.glob("runs/*/seed*.meta.json")):
        meta = json.loads(meta_path.read_text())
        jsonl = meta_path.with_name(
            meta_path.name.replace(".meta.json", ".jsonl"))
        recs = [json.loads(line) for line in jsonl.read_text().splitlines()]
        rec = RunRecord(meta["variant"], meta["seed"], recs,
                        meta["violations"], meta["env_steps"], meta["wall_s"],
                        meta.get("interventions_per_step", 0.0))
        records.setdefault(meta["variant"], []).append(rec)
    table = SummaryTable()
    for name in sorted(records):
        runs = sorted(records[name], key=lambda r: r.seed)
        floor = -np.inf
        table.rows.append(aggregate(name, runs, floor))
    return table
