"""Matplotlib renderings of grading and consistency reports.

Figures are written next to the delimited outputs by the CLI report path;
everything uses the Agg backend so headless runs work.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def accuracy_grid_figure(grid: dict[tuple[str, int], float], path: str, title: str = "Accuracy") -> None:
    """Accuracy vs. redundancy, one line per permutation order."""
    orders = sorted({o for o, _ in grid})
    reds = sorted({r for _, r in grid})
    fig, ax = plt.subplots(figsize=(6, 4))
    for order in orders:
        xs = [r for r in reds if (order, r) in grid]
        ys = [grid[(order, r)] for r in xs]
        ax.plot(xs, ys, marker="o", label=order)
    ax.set_xlabel("redundant dependencies")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def vov_figure(report, path: str) -> None:
    """Bar chart of the two VoV statistics (and normalized values if present)."""
    labels, values = [], []
    for name, value in (
        ("VoV_o", report.vov_o),
        ("VoV_r", report.vov_r),
        ("VoV_o / baseline", report.normalized_o),
        ("VoV_r / baseline", report.normalized_r),
    ):
        if value is not None:
            labels.append(name)
            values.append(value)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, values, color="tab:blue")
    ax.set_ylabel("variance of variations")
    ax.set_title("Reasoning consistency")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def probe_figure(f1_scores: dict[str, float], path: str) -> None:
    """Bar chart of F1-macro per probe method."""
    fig, ax = plt.subplots(figsize=(5, 4))
    names = list(f1_scores)
    ax.bar(names, [f1_scores[n] for n in names], color="tab:green")
    ax.set_ylabel("F1-macro")
    ax.set_ylim(0, 1.05)
    ax.set_title("Statement-relevance probing")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
