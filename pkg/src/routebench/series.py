"""Plot-ready per-episode mean travel times and a static SVG chart."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

from .errors import RouteBenchError

SERIES_HEADER = ("episode", "phase", "value_min")
GROUPS = {"all": None, "cav": "cav", "hdv": "human"}


def episode_means(record) -> dict[str, list[tuple[int, str, float]]]:
    """Per-group ``(episode, phase, mean minutes)``; groups with no rows are omitted."""
    acc: dict[str, dict[tuple[int, str], list[float]]] = {g: defaultdict(list) for g in GROUPS}
    for ep, phase, _aid, kind, _action, tt, _dist in record.rows:
        acc["all"][(ep, phase)].append(tt)
        if kind == "cav":
            acc["cav"][(ep, phase)].append(tt)
        else:
            acc["hdv"][(ep, phase)].append(tt)
    out = {}
    for g, by_ep in acc.items():
        if by_ep:
            out[g] = [(ep, ph, math.fsum(v) / len(v) / 60.0) for (ep, ph), v in sorted(by_ep.items())]
    return out


def emit_series(record, out_dir, t_pre: float | None = None) -> list[Path]:
    if not record.rows:
        raise RouteBenchError("cannot emit series for an empty record")
    series_dir = Path(out_dir) / "series"
    series_dir.mkdir(parents=True, exist_ok=True)
    means = episode_means(record)
    written = []
    for group, rows in means.items():
        path = series_dir / f"mean_tt_{group}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(SERIES_HEADER)
            for ep, phase, value in rows:
                w.writerow((ep, phase, repr(value)))
        written.append(path)
    written.append(_plot(means, series_dir / "mean_tt.svg", t_pre))
    return written


def _plot(means, path: Path, t_pre: float | None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed metadata keeps the SVG byte-stable across runs
    plt.rcParams["svg.hashsalt"] = "routebench"
    fig, ax = plt.subplots(figsize=(8, 4))
    styles = {"all": ("tab:gray", "all agents"), "hdv": ("black", "humans"), "cav": ("tab:red", "CAVs")}
    for group in ("all", "hdv", "cav"):
        if group in means:
            color, label = styles[group]
            xs = [r[0] for r in means[group]]
            ys = [r[2] for r in means[group]]
            ax.plot(xs, ys, color=color, label=label, linewidth=1)
    if t_pre is not None:
        ax.axhline(t_pre, color="tab:blue", linestyle="--", linewidth=1, label="t_pre")
    ax.set_xlabel("episode")
    ax.set_ylabel("mean travel time [min]")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path
