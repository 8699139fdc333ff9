"""Figures for prequential runs."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .stream import MetricsRow  # noqa: E402


def plot_metrics(rows: Sequence[MetricsRow], path, drift_at: Sequence[int] = (),
                 rebuilds: Sequence[int] = (), title: str | None = None) -> None:
    """Accuracy curves on top, tree size and model version below."""
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(8, 5.5), sharex=True,
                                  gridspec_kw={"height_ratios": [2, 1]})
    idx = [r.index for r in rows]
    ax.plot(idx, [r.window_accuracy for r in rows], label="window accuracy", lw=1.2)
    ax.plot(idx, [r.cumulative_accuracy for r in rows], label="cumulative accuracy",
            lw=1.2, ls="--")
    for d in drift_at:
        ax.axvline(d, color="crimson", lw=0.8, alpha=0.7)
    for b in rebuilds:
        ax.axvline(b, color="grey", lw=0.5, ls=":", alpha=0.6)
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower left", frameon=False, fontsize=8)
    if title:
        ax.set_title(title)

    ax2.step(idx, [r.tree_nodes for r in rows], where="post", label="tree nodes")
    ax2.set_ylabel("tree nodes")
    ax2.set_xlabel("instance index")
    ver = ax2.twinx()
    ver.step(idx, [r.model_version for r in rows], where="post", color="tab:orange",
             label="model version")
    ver.set_ylabel("model version")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
