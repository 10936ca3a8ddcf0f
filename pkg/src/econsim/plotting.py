"""Figures drawn from the plot-ready tables that ``econsim report`` writes.

Figures are rendered off-screen onto ``Figure`` objects, so importing this
module never changes the global matplotlib backend.
"""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasAgg(fig)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    return path


def _households(rows) -> List[int]:
    return sorted({int(r["household"]) for r in rows})


def training_curves(rows: Sequence[dict], path, title: str) -> Path:
    """Mean over seeds of each agent's per-iteration discounted return."""
    by_agent: Dict[str, Dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_agent[r["agent"]][int(r["iteration"])].append(r["return"])
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    for agent, series in by_agent.items():
        its = sorted(series)
        ax.plot(its, [np.mean(series[i]) for i in its], label=agent, lw=1.2)
    ax.set_xlabel("training iteration")
    ax.set_ylabel("mean discounted return")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)


def box_by_household(rows: Sequence[dict], column: str, path, title: str, group: str = None) -> Path:
    """Box plot of a per-episode quantity, one box per household (and group)."""
    hh = _households(rows)
    groups = sorted({r[group] for r in rows}) if group else [None]
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    data, labels, positions = [], [], []
    width = 0.8 / len(groups)
    for k, g in enumerate(groups):
        for i in hh:
            vals = [r[column] for r in rows
                    if int(r["household"]) == i and (g is None or r[group] == g) and not np.isnan(r[column])]
            data.append(vals if vals else [np.nan])
            positions.append(i + 1 + (k - (len(groups) - 1) / 2) * width)
            labels.append(f"H{i + 1}" + (f"\n{g}" if g else ""))
    ax.boxplot(data, positions=positions, widths=width * 0.9, showfliers=False)
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel(column)
    ax.set_title(title)
    return _save(fig, path)


def bars_with_ci(rows: Sequence[dict], label_col: str, path, title: str, ylabel: str) -> Path:
    fig = Figure(figsize=(5.0, 3.6))
    ax = fig.add_subplot()
    x = np.arange(len(rows))
    means = np.array([r["mean"] for r in rows])
    err = np.array([[r["mean"] - r["ci_low"] for r in rows], [r["ci_high"] - r["mean"] for r in rows]])
    ax.bar(x, means, yerr=err, capsize=4, color="0.6")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xticks(x)
    ax.set_xticklabels([str(r[label_col]) for r in rows], fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _save(fig, path)
