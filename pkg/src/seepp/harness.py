"""Batch experiment runner.

Layout of a results directory::

    config.yaml            resolved configuration
    steps/<mode>_trial<i>.csv
    results.csv            one row per (mode, trial)
    aggregate.csv          mean and sample standard deviation per mode
    timings.json           wall-clock planning times (kept out of the CSVs,
                           which must be byte-identical between runs)
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .geometry import View
from .metrics import CoverageTracker, per_view_stats, sample_ground_truth, travel_distance
from .occlusion import OcclusionConfig
from .planner import Planner, PlannerConfig, view_distance
from .point_store import StoreConfig
from .scenes import load_scene
from .sensor_sim import SceneMesh, capture
from .view_proposal import ProposalConfig

STEP_COLUMNS = ["step", "views_total", "frontiers", "frontiers_resolved", "coverage_est", "cumulative_distance_m"]
RESULT_COLUMNS = ["scene", "mode", "seed", "views", "coverage", "distance_m", "coverage_per_view", "frontiers_per_view"]
METRICS = ["views", "coverage", "distance_m", "coverage_per_view", "frontiers_per_view"]
AGGREGATE_COLUMNS = ["scene", "mode", "trials"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")]


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) for c in columns])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def mean_std(values):
    """Mean and sample standard deviation (0 for a single value), correctly rounded."""
    vals = [float(v) for v in values]
    m = statistics.fmean(vals) if len(vals) else math.nan
    s = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return m, s


def planner_config(cfg: ExperimentConfig, mode: str):
    p = cfg.planner
    d = view_distance(cfg.sensor, p.rho)
    sensor = cfg.sensor if math.isfinite(cfg.sensor.max_range) else cfg.sensor.with_range(10.0 * d)
    pc = PlannerConfig(
        mode=mode,
        store=StoreConfig(p.rho, p.r),
        occlusion=OcclusionConfig(p.psi, p.r),
        proposal=ProposalConfig(d, p.psi, p.normal_k, math.radians(p.projection_resolution_deg)),
        tau=p.tau,
        max_views=p.max_views,
        adjust_step=p.adjust_step,
        fov_half_angle=sensor.half_angle,
    )
    return pc, sensor


def seed_view(cfg: ExperimentConfig, mesh: SceneMesh, d: float, seed: int) -> View:
    if cfg.seed_view != "random":
        return View(cfg.seed_view["position"], cfg.seed_view["orientation"])
    lo, hi = mesh.bounds
    centre = 0.5 * (lo + hi)
    u = np.random.default_rng(seed).normal(size=3)
    u /= np.linalg.norm(u)
    return View.looking_at(centre + d * u, centre)


def capture_seed(trial_seed: int, k: int) -> int:
    return int(np.random.SeedSequence([trial_seed, k]).generate_state(1)[0])


@dataclass
class TrialResult:
    steps: list
    row: dict
    plan_times: list


def run_trial(cfg: ExperimentConfig, mesh: SceneMesh, gt, mode: str, seed: int) -> TrialResult:
    pc, sensor = planner_config(cfg, mode)
    planner = Planner(pc, seed_view(cfg, mesh, pc.proposal.d, seed))
    tracker = CoverageTracker(gt, cfg.metrics.r_d)
    steps = []
    while True:
        k = len(planner.view_history) - 1
        view = planner.current_view
        pts = capture(mesh, view, sensor, capture_seed(seed, k))
        nxt = planner.step(pts)
        tracker.add(planner.store.positions[-planner.log[-1].accepted:] if planner.log[-1].accepted else [])
        steps.append({
            "step": k,
            "views_total": k + 1,
            "frontiers": planner.log[-1].frontiers,
            "frontiers_resolved": planner.log[-1].resolved,
            "coverage_est": tracker.coverage,
            "cumulative_distance_m": travel_distance(planner.view_history[: k + 1]),
        })
        if nxt is None:
            break
    stats = per_view_stats([s["frontiers_resolved"] for s in steps], [s["coverage_est"] for s in steps])
    row = {
        "scene": cfg.scene_name,
        "mode": mode,
        "seed": seed,
        "views": len(steps),
        "coverage": steps[-1]["coverage_est"],
        "distance_m": steps[-1]["cumulative_distance_m"],
        "coverage_per_view": stats.mean_gain,
        "frontiers_per_view": stats.mean_frontiers,
    }
    return TrialResult(steps, row, [s.plan_time for s in planner.log])


def aggregate(rows, scene: str, modes) -> list[dict]:
    out = []
    for mode in modes:
        sel = [r for r in rows if r["mode"] == mode]
        agg = {"scene": scene, "mode": mode, "trials": len(sel)}
        for m in METRICS:
            agg[f"{m}_mean"], agg[f"{m}_std"] = mean_std([r[m] for r in sel])
        out.append(agg)
    return out


def run_experiment(cfg: ExperimentConfig, out_dir=None, log=print) -> str:
    out = out_dir or cfg.output_dir
    os.makedirs(os.path.join(out, "steps"), exist_ok=True)
    cfg.dump(os.path.join(out, "config.yaml"))
    mesh = load_scene(cfg.scene_path())
    pc, _ = planner_config(cfg, cfg.modes[0])
    gt = sample_ground_truth(mesh, cfg.metrics.sample_count(mesh.area, pc.store.epsilon), cfg.metrics.gt_seed)
    rows, timings = [], {}
    for mode in cfg.modes:
        for i in range(cfg.trials):
            seed = cfg.seed_base + i
            t0 = time.perf_counter()
            res = run_trial(cfg, mesh, gt, mode, seed)
            write_csv(os.path.join(out, "steps", f"{mode}_trial{i}.csv"), STEP_COLUMNS, res.steps)
            rows.append(res.row)
            timings.setdefault(mode, []).append({
                "seed": seed,
                "planning_time_s": math.fsum(res.plan_times),
                "step_time_s": res.plan_times,
                "wall_time_s": time.perf_counter() - t0,
            })
            if log:
                r = res.row
                log(f"{mode} trial {i}: views={r['views']} coverage={r['coverage']:.4f} distance={r['distance_m']:.2f} m")
    write_csv(os.path.join(out, "results.csv"), RESULT_COLUMNS, rows)
    write_csv(os.path.join(out, "aggregate.csv"), AGGREGATE_COLUMNS, aggregate(rows, cfg.scene_name, cfg.modes))
    with open(os.path.join(out, "timings.json"), "w") as fh:
        json.dump(timings, fh, indent=1)
    return out
