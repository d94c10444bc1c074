"""Static result figures: coverage vs views, planning time and travel distance."""

from __future__ import annotations

import glob
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import AGGREGATE_COLUMNS, STEP_COLUMNS, mean_std, read_csv  # noqa: E402

COVERAGE_FLOOR = 50.0  # percent; lower bound of the coverage axis
LABELS = {"see": "SEE", "see_plus_plus": "SEE++"}


class SchemaError(ValueError):
    pass


def _require(rows, columns, what):
    if not rows:
        raise SchemaError(f"{what} is empty")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise SchemaError(f"{what} lacks columns {missing}")


def coverage_curves(results_dir, mode):
    """Mean and std coverage (%) after each view; finished runs hold their final value."""
    runs = []
    for path in sorted(glob.glob(os.path.join(results_dir, "steps", f"{mode}_trial*.csv"))):
        rows = read_csv(path)
        _require(rows, STEP_COLUMNS, path)
        runs.append([100.0 * float(r["coverage_est"]) for r in rows])
    if not runs:
        return np.empty(0), np.empty(0)
    n = max(len(r) for r in runs)
    grid = np.array([r + [r[-1]] * (n - len(r)) for r in runs])
    return grid.mean(axis=0), grid.std(axis=0, ddof=1) if len(runs) > 1 else np.zeros(n)


def emit_plots(results_dir) -> list[str]:
    agg_path = os.path.join(results_dir, "aggregate.csv")
    if not os.path.isfile(agg_path):
        raise SchemaError(f"missing {agg_path}")
    agg = read_csv(agg_path)
    _require(agg, AGGREGATE_COLUMNS, agg_path)
    timings = {}
    tpath = os.path.join(results_dir, "timings.json")
    if os.path.isfile(tpath):
        with open(tpath) as fh:
            timings = json.load(fh)
    files = []
    for scene in sorted({r["scene"] for r in agg}):
        rows = [r for r in agg if r["scene"] == scene]
        modes = [r["mode"] for r in rows]
        labels = [LABELS.get(m, m) for m in modes]

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for mode, label in zip(modes, labels):
            mu, sd = coverage_curves(results_dir, mode)
            x = np.arange(1, len(mu) + 1)
            ax.errorbar(x, mu, yerr=sd, label=label, capsize=2, marker=".")
        ax.set_ylim(COVERAGE_FLOOR, 100.0)
        ax.set_xlabel("views")
        ax.set_ylabel("surface coverage (%)")
        ax.legend()
        files.append(_save(fig, results_dir, f"{scene}_coverage.png"))

        fig, ax = plt.subplots(figsize=(4, 3.5))
        tm = [mean_std([t["planning_time_s"] for t in timings.get(m, [])]) if timings.get(m) else (0.0, 0.0)
              for m in modes]
        ax.bar(labels, [t[0] for t in tm], yerr=[t[1] for t in tm], capsize=4, color=["C0", "C1"][: len(modes)])
        ax.set_ylabel("planning time (s)")
        files.append(_save(fig, results_dir, f"{scene}_time.png"))

        fig, ax = plt.subplots(figsize=(4, 3.5))
        ax.bar(labels, [float(r["distance_m_mean"]) for r in rows],
               yerr=[float(r["distance_m_std"]) for r in rows], capsize=4, color=["C0", "C1"][: len(modes)])
        ax.set_ylabel("distance travelled (m)")
        files.append(_save(fig, results_dir, f"{scene}_distance.png"))
    return files


def _save(fig, results_dir, name):
    path = os.path.join(results_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
