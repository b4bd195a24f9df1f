"""Render report figures: the 4x4 histogram grid and table heatmaps.

Output is PNG with a fixed dpi so repeated runs over identical inputs
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graph import CATEGORIES, RatioCategory

if TYPE_CHECKING:
    from .analysis import (
        CrossCategoryCounts,
        CrossCategorySimilarity,
        SimilarityHistogram,
    )

DPI = 150


def _short(cat: RatioCategory) -> str:
    return f"{cat.display_name} ({cat.letter})"


def render_histogram_grid(
    histograms: Mapping[tuple[RatioCategory, RatioCategory], "SimilarityHistogram"],
    path: Path,
) -> None:
    fig, axes = plt.subplots(4, 4, figsize=(13, 11), sharex=True, sharey=True)
    for i, ca in enumerate(CATEGORIES):
        for j, cb in enumerate(CATEGORIES):
            ax = axes[i, j]
            hist = histograms[(ca, cb)]
            edges = hist.bin_edges
            ax.bar(
                edges[:-1],
                hist.heights,
                width=edges[1] - edges[0],
                align="edge",
                color="tab:blue",
                edgecolor="white",
                linewidth=0.4,
            )
            ax.set_title(
                f"{_short(ca)} to {_short(cb)}  (n={hist.total})", fontsize=8
            )
            ax.set_xlim(0.0, 1.0)
            if i == 3:
                ax.set_xlabel("cosine similarity", fontsize=8)
            if j == 0:
                ax.set_ylabel("normalized count", fontsize=8)
            ax.tick_params(labelsize=7)
    fig.suptitle("Similarity histograms by follower/followee category", fontsize=12)
    fig.tight_layout(rect=(0, 0, 1, 0.97))
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def _heatmap(matrix: np.ndarray, title: str, path: Path, value_fmt) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    display = np.array(matrix, dtype=float)
    masked = np.ma.masked_invalid(display)
    image = ax.imshow(masked, cmap="viridis")
    ax.set_xticks(range(4), [c.letter for c in CATEGORIES])
    ax.set_yticks(range(4), [c.letter for c in CATEGORIES])
    ax.set_xlabel("followee category")
    ax.set_ylabel("follower category")
    for i in range(4):
        for j in range(4):
            value = display[i, j]
            text = "-" if np.isnan(value) else value_fmt(value)
            ax.text(j, i, text, ha="center", va="center", color="white", fontsize=9)
    ax.set_title(title)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_report_figures(
    counts: "CrossCategoryCounts",
    similarity: "CrossCategorySimilarity",
    histograms: Mapping[tuple[RatioCategory, RatioCategory], "SimilarityHistogram"],
    figures_dir: str | Path,
) -> list[Path]:
    """Write the three report figures; returns the files written."""
    figures_dir = Path(figures_dir)
    figures_dir.mkdir(parents=True, exist_ok=True)

    grid_path = figures_dir / "histograms.png"
    render_histogram_grid(histograms, grid_path)

    counts_path = figures_dir / "edge_counts.png"
    _heatmap(
        counts.matrix,
        "Following relationships between categories",
        counts_path,
        lambda v: str(int(v)),
    )

    sim_path = figures_dir / "mean_similarity.png"
    _heatmap(
        similarity.means,
        "Mean similarity between categories",
        sim_path,
        lambda v: f"{v:.4f}",
    )
    return [grid_path, counts_path, sim_path]
