"""Matplotlib renderers for report and grid outputs.

Every function writes a figure file next to the delimited data the CLI
already emits; nothing here feeds back into the pipeline. The Agg backend
is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import EvalReport, TopoGrid
from .spectral import Spectrogram


def save_cell_accuracies(report: EvalReport, path: str | Path) -> Path:
    """Bar chart of per-cell accuracy with the mean as a reference line."""
    path = Path(path)
    names = [c.name for c in report.cells]
    accs = report.accuracies
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(names) + 2.0), 3.2))
    ax.bar(range(len(names)), accs, color="#4878a8")
    ax.axhline(report.mean_accuracy, color="#b04030", linestyle="--",
               label=f"mean {report.mean_accuracy:.1f}%")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.set_title(report.protocol)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_accuracy_matrix(report: EvalReport, path: str | Path) -> Path:
    """Train-by-test heatmap for grid protocols."""
    path = Path(path)
    grid = report.accuracy_matrix()
    keys = report.grid_keys
    fig, ax = plt.subplots(figsize=(1.2 * len(keys) + 2.0, 1.2 * len(keys) + 1.5))
    im = ax.imshow(grid, cmap="viridis", vmin=0, vmax=100)
    for i in range(len(keys)):
        for j in range(len(keys)):
            ax.text(j, i, f"{grid[i, j]:.1f}", ha="center", va="center",
                    color="white", fontsize=8)
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(keys)))
    ax.set_yticklabels(keys, fontsize=8)
    ax.set_xlabel("test")
    ax.set_ylabel("train")
    fig.colorbar(im, ax=ax, label="accuracy (%)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_topo_figure(grid: TopoGrid, path: str | Path) -> Path:
    """Channel values scattered at their scalp positions inside a head circle."""
    path = Path(path)
    xs = np.array([grid.coordinates[ch][0] for ch in grid.values])
    ys = np.array([grid.coordinates[ch][1] for ch in grid.values])
    vs = np.array(list(grid.values.values()))
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    circle = plt.Circle((0, 0), 1.02, fill=False, color="black", linewidth=1.0)
    ax.add_patch(circle)
    sc = ax.scatter(xs, ys, c=vs, s=120, cmap="RdBu_r", edgecolors="black",
                    linewidths=0.4)
    for ch in grid.values:
        x, y = grid.coordinates[ch]
        ax.text(x, y - 0.08, ch, ha="center", va="top", fontsize=4)
    ax.set_xlim(-1.15, 1.15)
    ax.set_ylim(-1.15, 1.15)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title(f"class {grid.label}, {grid.band}", fontsize=9)
    fig.colorbar(sc, ax=ax, shrink=0.75)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_spectrogram_figure(s: Spectrogram, channel: str, path: str | Path) -> Path:
    """Time-by-frequency power map of one channel (log10 scale)."""
    path = Path(path)
    if channel not in s.channel_names:
        raise ValueError(f"unknown channel {channel!r}")
    ci = s.channel_names.index(channel)
    power = s.power[ci].T      # (bins, windows)
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    im = ax.imshow(
        np.log10(np.maximum(power, 1e-12)),
        origin="lower", aspect="auto", cmap="magma",
        extent=(0, s.n_windows * s.window_seconds, s.bin_hz[0], s.bin_hz[-1]),
    )
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    ax.set_title(channel)
    fig.colorbar(im, ax=ax, label="log10 power")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
