"""Matplotlib figures rendered next to the delimited report outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport, StudyRow


def plot_auc_report(reports: list[EvalReport], path) -> None:
    """Grouped bar chart of mean test AUC (error bars: std over retrains)."""
    aggregations = sorted({r.aggregation for r in reports})
    methods = sorted({r.method for r in reports})
    width = 0.8 / max(len(aggregations), 1)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(methods)), 4.0))
    xs = np.arange(len(methods))
    by_cell = {(r.method, r.aggregation): r for r in reports}
    for k, agg in enumerate(aggregations):
        means = [by_cell[(m, agg)].mean if (m, agg) in by_cell else np.nan for m in methods]
        stds = [by_cell[(m, agg)].std if (m, agg) in by_cell else 0.0 for m in methods]
        ax.bar(xs + k * width, means, width=width, yerr=stds, capsize=2, label=agg)
    ax.set_xticks(xs + width * (len(aggregations) - 1) / 2)
    ax.set_xticklabels(methods, rotation=30, ha="right")
    ax.set_ylabel("test AUC")
    ax.set_ylim(0.4, 1.0)
    ax.axhline(0.5, color="gray", linestyle=":", linewidth=1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_prev_next_ratios(rows: list[StudyRow], path) -> None:
    """Two panels (prev / next) of AUC ratio to baseline per snapshot."""
    methods = sorted({r.method for r in rows})
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    for ax, scenario in zip(axes, ("prev", "next")):
        for m in methods:
            pts = sorted(
                (r.snapshot, r.ratio) for r in rows if r.method == m and r.scenario == scenario
            )
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=m)
        ax.axhline(1.0, color="gray", linestyle=":", linewidth=1)
        ax.set_ylabel(f"{scenario}: AUC ratio")
    axes[1].set_xlabel("snapshot index")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_loss_trace(trace_rows, path) -> None:
    """Scaled model/alignment/combined loss curves over batches."""
    batches = [b for b, _ in trace_rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(batches, [p.model_scaled for _, p in trace_rows], label="model (scaled)")
    ax.plot(batches, [p.alignment_scaled for _, p in trace_rows], label="alignment (scaled)")
    ax.plot(batches, [p.combined for _, p in trace_rows], label="combined")
    ax.set_xlabel("batch")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
