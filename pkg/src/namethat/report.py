"""Figure rendering for evaluation outputs.

Every CLI report path can drop a PNG next to its CSV; the CSV stays the
canonical, scriptable output and the figures are for eyeballs.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import CalibrationResult, CurveRow


def plot_eval_curves(
    curves: Mapping[str, Sequence[CurveRow]],
    path,
    *,
    title: str = "One-shot naming accuracy",
) -> None:
    """Plot one accuracy-vs-category-count line per labeled curve."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, rows in curves.items():
        ax.plot(
            [row.m for row in rows],
            [row.accuracy for row in rows],
            marker="o",
            markersize=3.5,
            linewidth=1.5,
            label=label,
        )
    ax.set_xlabel("categories taught")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_threshold_sweep(result: CalibrationResult, path) -> None:
    """Plot the calibration sweep with the recommended threshold marked."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    taus = [p.tau for p in result.sweep]
    ax.plot(taus, [p.balanced_accuracy for p in result.sweep],
            label="balanced accuracy", linewidth=1.8)
    ax.plot(taus, [p.known_accept_rate for p in result.sweep],
            label="known accepted", linewidth=1.0, alpha=0.7)
    ax.plot(taus, [p.unknown_reject_rate for p in result.sweep],
            label="unknown rejected", linewidth=1.0, alpha=0.7)
    ax.axvline(result.recommended, color="k", linestyle="--", linewidth=1.0,
               label=f"recommended = {result.recommended:.2f}")
    ax.set_xlabel("relevance threshold")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax.set_title("Known/unknown rejection sweep")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
