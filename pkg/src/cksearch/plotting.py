"""PNG figures for experiment reports (no pyplot state, safe headless)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

DPI = 120


def _groups(rows, key):
    groups: dict[str, list[float]] = {}
    for row in rows:
        if "error" in row["flags"]:
            continue
        groups.setdefault(f"{row['algo']}-{row['variant']}", []).append(float(row[key]))
    return groups


def _boxplot(groups: dict, ylabel: str, path: Path, log: bool = False) -> Path:
    fig = Figure(figsize=(max(4.0, 1.2 * len(groups) + 2), 3.2))
    ax = fig.add_subplot()
    names = list(groups)
    ax.boxplot([groups[k] for k in names], showmeans=True)
    ax.set_xticks(range(1, len(names) + 1))
    ax.set_xticklabels(names, rotation=20)
    ax.set_ylabel(ylabel)
    if log:
        ax.set_yscale("log")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    return path


def plot_report(report, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    prec = _groups(report.rows, "precision")
    if prec:
        paths["precision_fig"] = _boxplot(prec, "precision", out_dir / "precision.png")
    runtime = _groups(report.rows, "runtime_ms")
    if runtime and any(v > 0 for vals in runtime.values() for v in vals):
        paths["runtime_fig"] = _boxplot(runtime, "response time (ms)", out_dir / "runtime.png",
                                        log=True)
    return paths


def plot_convergence(trace: Sequence[float], path) -> Path:
    """Euclidean distance between consecutive walk iterates."""
    fig = Figure(figsize=(4.5, 3.0))
    ax = fig.add_subplot()
    steps = np.arange(1, len(trace) + 1)
    ax.semilogy(steps, np.maximum(np.asarray(trace, dtype=float), 1e-300))
    ax.set_xlabel("iteration")
    ax.set_ylabel(r"$\|\pi^{(t)} - \pi^{(t-1)}\|_2$")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=DPI)
    return path
