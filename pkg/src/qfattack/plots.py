"""Figure rendering for reports and attack trajectories.

Uses the Agg backend so figures render headlessly; files land next to the
delimited report output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import AggregateReport


def render_report_figure(
    cells: Mapping[tuple[str, str], AggregateReport], path: str | Path
) -> Path:
    """Bar chart of mean score with std error bars, grouped by setting."""
    path = Path(path)
    settings = sorted({setting for setting, _ in cells})
    conditions = sorted({condition for _, condition in cells})

    fig, axes = plt.subplots(1, len(settings), figsize=(5 * len(settings), 4), squeeze=False)
    for ax, setting in zip(axes[0], settings):
        labels, means, stds = [], [], []
        for condition in conditions:
            agg = cells.get((setting, condition))
            if agg is None:
                continue
            labels.append(condition)
            means.append(agg.mean)
            stds.append(agg.std)
        ax.bar(range(len(labels)), means, yerr=stds, capsize=4, color="#4878d0")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylabel("cosine score")
        ax.set_title(setting)
        ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trajectory_figure(
    trajectories: Mapping[str, Sequence[tuple[int, float]]], path: str | Path
) -> Path:
    """Best-loss-so-far curves, one line per labeled run."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, points in sorted(trajectories.items()):
        xs = [i for i, _ in points]
        ys = [v for _, v in points]
        ax.plot(xs, ys, label=label, linewidth=1.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best loss")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
