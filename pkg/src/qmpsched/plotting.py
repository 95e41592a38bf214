"""Static figures for the report and bench commands (written to files, Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import BenchRow, Summary  # noqa: E402


def speedup_figure(s: Summary, path: str | Path) -> Path:
    """Grouped bars: mean speedup per class, one bar per scheduler configuration."""
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(s.classes), 3.6))
    k = max(len(s.configs), 1)
    width = 0.8 / k
    xs = np.arange(len(s.classes))
    for i, cfg in enumerate(s.configs):
        vals = [s.mean_speedup.get((cfg, c), np.nan) for c in s.classes]
        ax.bar(xs + (i - (k - 1) / 2) * width, vals, width, label=cfg)
    ax.axhline(1.0, color="0.4", lw=0.8, ls=":")
    ax.set_xticks(xs, s.classes)
    ax.set_xlabel("class")
    ax.set_ylabel("speedup")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def improvement_figure(s: Summary, path: str | Path) -> Path:
    """Mean defrag improvement (%) per class and scheduler."""
    scheds = sorted({k[0] for k in s.improvement})
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(s.classes), 3.2))
    k = max(len(scheds), 1)
    width = 0.8 / k
    xs = np.arange(len(s.classes))
    for i, sch in enumerate(scheds):
        vals = [s.improvement.get((sch, c), np.nan) for c in s.classes]
        ax.bar(xs + (i - (k - 1) / 2) * width, vals, width, label=sch.upper())
    ax.axhline(0.0, color="0.3", lw=0.8)
    ax.set_xticks(xs, s.classes)
    ax.set_xlabel("class")
    ax.set_ylabel("improvement (%)")
    if scheds:
        ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def bench_figure(rows: Sequence[BenchRow], path: str | Path) -> Path:
    """Mean per-batch scheduling time against batch size, log scale."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for sch in sorted({r.scheduler for r in rows}):
        pts = sorted((r.B, np.mean(r.samples)) for r in rows if r.scheduler == sch and r.samples)
        if pts:
            ax.plot(*zip(*pts), marker="o", label=sch.upper())
    ax.set_yscale("log")
    ax.set_xlabel("batch size B")
    ax.set_ylabel("mean time per batch (µs)")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
