"""Figures for ``nkeps compare``: phase-time breakdown and master convergence."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

PHASE_ORDER = ("build", "milp", "rmp", "oracle", "dsp")
PHASE_LABELS = {"build": "EF build", "milp": "EF MILP", "rmp": "RMP", "oracle": "M-PSIP", "dsp": "DSP"}


def phase_times(records, path) -> Path:
    """Stacked horizontal bars, one per method, split by solver phase."""
    fig, ax = plt.subplots(figsize=(7.4, 1.4 + 0.6 * len(records)))
    names = [r.method for r in records]
    left = [0.0] * len(records)
    for phase in PHASE_ORDER:
        widths = [r.timers.get(phase, 0.0) for r in records]
        if not any(widths):
            continue
        ax.barh(names, widths, left=left, label=PHASE_LABELS[phase])
        left = [a + b for a, b in zip(left, widths)]
    ax.set_xlabel("seconds")
    ax.invert_yaxis()
    ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0), fontsize="small", frameon=False)
    ax.set_title("Time by phase")
    fig.tight_layout()
    return _save(fig, path)


def convergence(records, path) -> Path:
    """Master objective per iteration for decomposition methods; EF as a reference line."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for r in records:
        if r.master_objectives:
            its = range(1, len(r.master_objectives) + 1)
            ax.plot(its, r.master_objectives, marker="o", markersize=3, label=r.method)
        elif r.objective is not None:
            ax.axhline(r.objective, linestyle="--", color="grey", label=f"{r.method} optimum")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("iteration")
    ax.set_ylabel("master objective")
    ax.set_title("Master lower bound")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamp metadata, so reruns write identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
