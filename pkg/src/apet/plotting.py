"""Figures written next to evaluation tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _label(row):
    if row["method"] == "apet":
        return f"ApET-{row['sampler']}\nM={row['m']}"
    return row["method"]


def plot_eval(rows, path, title=None):
    """Bar charts of reconstruction error and outlier recall, one panel row per K."""
    keeps = sorted({r["k"] for r in rows})
    has_recall = any(r["recall_mean"] is not None for r in rows)
    ncols = 2 if has_recall else 1
    fig, axes = plt.subplots(len(keeps), ncols, figsize=(4.5 * ncols, 3.2 * len(keeps)),
                             squeeze=False)
    for i, k in enumerate(keeps):
        sub = [r for r in rows if r["k"] == k]
        labels = [_label(r) for r in sub]
        colors = ["tab:blue" if r["method"] == "apet" else "tab:gray" for r in sub]
        ax = axes[i][0]
        ax.bar(range(len(sub)), [r["rel_error_mean"] for r in sub],
               yerr=[r["rel_error_std"] for r in sub], color=colors, capsize=2)
        ax.set_ylabel("relative recon. error")
        ax.set_title(f"K={k}", fontsize=10)
        if has_recall:
            ax2 = axes[i][1]
            ax2.bar(range(len(sub)), [r["recall_mean"] or 0.0 for r in sub], color=colors)
            ax2.set_ylim(0, 1.05)
            ax2.set_ylabel("outlier recall")
            ax2.set_title(f"K={k}", fontsize=10)
        for a in axes[i]:
            a.set_xticks(range(len(sub)))
            a.set_xticklabels(labels, fontsize=7, rotation=45, ha="right")
            a.grid(axis="y", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_residuals(residuals, retained, path):
    """Per-token residual profile with retained tokens highlighted."""
    fig, ax = plt.subplots(figsize=(7, 2.8))
    idx = range(len(residuals))
    ax.plot(idx, residuals, lw=0.8, color="tab:gray")
    ax.scatter(list(retained), [residuals[i] for i in retained], s=8, color="tab:red",
               label="retained", zorder=3)
    ax.set_xlabel("token index")
    ax.set_ylabel("approximation error")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
