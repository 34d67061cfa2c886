#!/usr/bin/env python3
"""Render training-curve figures from trainer metrics CSVs.

Inputs are one ``metrics.csv`` per run (the trainer's fixed schema). A
``config.json`` beside a CSV supplies the method label (its ``her``
field) and seed; runs of the same method are aggregated per episode into
a mean and a population standard deviation across seeds.

Outputs two figures (PNG and SVG each):

- ``coverage``: mean validation coverage per method, with a +-1 std band;
- ``curriculum``: mean relabeled goal size (left axis, solid) and mean
  inserted trajectory length (right axis, dashed) per method.

Usage: ``python3 plots/render.py --in runs/*/metrics.csv --out figs/``
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

EXPECTED_COLUMNS = ["episode", "mean_loss", "mean_goal_size",
                    "mean_traj_len", "buffer_size", "temperature", "lr",
                    "val_coverage", "val_total_len"]


class SchemaError(Exception):
    pass


def load_run(path):
    """One CSV as a dict of numpy arrays; blank cells become NaN."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EXPECTED_COLUMNS:
            raise SchemaError(
                f"{path}: expected columns {EXPECTED_COLUMNS}, found {header}")
        rows = list(reader)
    columns = {}
    for i, name in enumerate(EXPECTED_COLUMNS):
        values = [row[i] if i < len(row) else "" for row in rows]
        columns[name] = np.array(
            [float(v) if v != "" else np.nan for v in values])
    meta = {"method": "run", "seed": None}
    sidecar = path.parent / "config.json"
    if sidecar.is_file():
        config = json.loads(sidecar.read_text(encoding="utf-8"))
        meta["method"] = str(config.get("her", "run"))
        meta["seed"] = config.get("seed")
    return meta, columns


def aggregate_series(runs, column):
    """Per-episode mean and population std of ``column`` across runs.

    Episodes are aligned on the union of the runs' episode indices; the
    statistics ignore missing values (NaN) per episode.
    """
    episodes = sorted({int(e) for _, cols in runs
                       for e in cols["episode"] if not np.isnan(e)})
    index = {e: i for i, e in enumerate(episodes)}
    table = np.full((len(runs), len(episodes)), np.nan)
    for r, (_, cols) in enumerate(runs):
        for e, v in zip(cols["episode"], cols[column]):
            if not np.isnan(e):
                table[r, index[int(e)]] = v
    with np.errstate(invalid="ignore"):
        counts = np.sum(~np.isnan(table), axis=0)
        mean = np.where(counts > 0, np.nanmean(table, axis=0), np.nan)
        std = np.where(counts > 0, np.nanstd(table, axis=0), np.nan)
    return np.array(episodes), mean, std


def group_by_method(runs):
    groups = {}
    for meta, cols in runs:
        groups.setdefault(meta["method"], []).append((meta, cols))
    return dict(sorted(groups.items()))


def render(csv_paths, out_dir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    runs = [load_run(p) for p in csv_paths]
    if not runs:
        raise SchemaError("no input CSV files")
    groups = group_by_method(runs)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    for method, members in groups.items():
        episodes, mean, std = aggregate_series(members, "val_coverage")
        mask = ~np.isnan(mean)
        label = f"{method} ({len(members)} seed"
        label += "s)" if len(members) != 1 else ")"
        line, = ax.plot(episodes[mask], mean[mask], label=label)
        ax.fill_between(episodes[mask], (mean - std)[mask],
                        (mean + std)[mask], alpha=0.25,
                        color=line.get_color())
    ax.set_xlabel("episode")
    ax.set_ylabel("validation coverage (solved instances)")
    ax.set_title("Coverage during training (mean ± std across seeds)")
    ax.legend()
    fig.tight_layout()
    for ext in ("png", "svg"):
        target = out_dir / f"coverage.{ext}"
        fig.savefig(target)
        written.append(target)
    plt.close(fig)

    fig, left = plt.subplots(figsize=(7, 4))
    right = left.twinx()
    for method, members in groups.items():
        episodes, goal_mean, _ = aggregate_series(members, "mean_goal_size")
        mask = ~np.isnan(goal_mean)
        line, = left.plot(episodes[mask], goal_mean[mask],
                          label=f"{method} goal size")
        episodes, len_mean, _ = aggregate_series(members, "mean_traj_len")
        mask = ~np.isnan(len_mean)
        right.plot(episodes[mask], len_mean[mask], linestyle="--",
                   color=line.get_color(), alpha=0.7,
                   label=f"{method} trajectory length")
    left.set_xlabel("episode")
    left.set_ylabel("mean relabeled goal size (solid)")
    right.set_ylabel("mean trajectory length (dashed)")
    left.set_title("Relabeled goal size and trajectory length")
    handles_l, labels_l = left.get_legend_handles_labels()
    handles_r, labels_r = right.get_legend_handles_labels()
    left.legend(handles_l + handles_r, labels_l + labels_r, fontsize=8)
    fig.tight_layout()
    for ext in ("png", "svg"):
        target = out_dir / f"curriculum.{ext}"
        fig.savefig(target)
        written.append(target)
    plt.close(fig)
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Render training curves from metrics CSVs.")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="metrics.csv files (one per run)")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        written = render(args.inputs, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
