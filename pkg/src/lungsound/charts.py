"""Chart generation for dataset statistics and training runs."""

import tempfile
from typing import Optional

import matplotlib
matplotlib.use("Agg")  # Non-interactive backend
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .ingest import DatasetStats

# Color palette - dark theme inspired
COLORS = {
    "background": "#1a1a2e",
    "surface": "#16213e",
    "text": "#e0e0e0",
    "text_dim": "#888888",
    "grid": "#333355",
    "blue": "#4cc9f0",
    "purple": "#7b2cbf",
    "pink": "#f72585",
    "green": "#4ade80",
    "yellow": "#fbbf24",
    "orange": "#fb923c",
    "cyan": "#22d3ee",
}

DEVICE_COLORS = {
    "Microphone": COLORS["blue"],
    "LittmannClassic": COLORS["purple"],
    "Littmann3200": COLORS["pink"],
    "Meditron": COLORS["green"],
}


def _apply_dark_theme(fig: plt.Figure, ax: plt.Axes) -> None:
    """Apply consistent dark theme to a chart."""
    fig.patch.set_facecolor(COLORS["background"])
    ax.set_facecolor(COLORS["surface"])
    ax.tick_params(colors=COLORS["text_dim"], labelsize=9)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.spines["left"].set_color(COLORS["grid"])
    ax.spines["bottom"].set_color(COLORS["grid"])
    ax.grid(axis="y", color=COLORS["grid"], alpha=0.3, linewidth=0.5)
    ax.title.set_color(COLORS["text"])
    ax.xaxis.label.set_color(COLORS["text_dim"])
    ax.yaxis.label.set_color(COLORS["text_dim"])


def _legend(ax: plt.Axes) -> None:
    ax.legend(loc="upper right", fontsize=8, facecolor=COLORS["surface"],
              edgecolor=COLORS["grid"], labelcolor=COLORS["text_dim"])


def _save_chart(fig: plt.Figure, output: Optional[str] = None) -> str:
    """Save chart to file and return the path."""
    if output:
        path = str(output)
    else:
        tmp = tempfile.NamedTemporaryFile(suffix=".png", delete=False, prefix="lungsound_")
        path = tmp.name
        tmp.close()

    fig.savefig(path, dpi=150, bbox_inches="tight", facecolor=fig.get_facecolor())
    plt.close(fig)
    return path


def _age_heatmap(fig: plt.Figure, ax: plt.Axes, stats: DatasetStats) -> None:
    matrix = stats.class_by_age_group.to_numpy()
    image = ax.imshow(matrix, aspect="auto", cmap="magma")
    width = stats.age_group_width_years
    ax.set_xticks(np.arange(matrix.shape[1]))
    ax.set_xticklabels(
        [f"{i * width:g}-{(i + 1) * width:g}" for i in range(matrix.shape[1] - 1)]
        + [f"{(matrix.shape[1] - 1) * width:g}+"],
        rotation=45, ha="right", fontsize=7,
    )
    ax.set_yticks(np.arange(matrix.shape[0]))
    ax.set_yticklabels(stats.class_by_age_group.index, fontsize=8)
    for (row, col), value in np.ndenumerate(matrix):
        if value:
            ax.text(col, row, str(value), ha="center", va="center", fontsize=7, color=COLORS["text"])
    ax.set_title("Subjects by Age Group", fontsize=11)
    ax.set_xlabel("Age (years)")
    ax.grid(False)
    fig.colorbar(image, ax=ax, fraction=0.04)


def chart_age_groups(stats: DatasetStats, output: Optional[str] = None) -> str:
    """2-D histogram of subjects per class and age group.

    Returns:
        Path to the generated PNG file.
    """
    fig, ax = plt.subplots(figsize=(10, 5))
    _apply_dark_theme(fig, ax)
    _age_heatmap(fig, ax, stats)
    return _save_chart(fig, output)


def chart_dataset(
    stats: DatasetStats,
    output: Optional[str] = None,
    split_durations: Optional[pd.DataFrame] = None,
) -> str:
    """Generate 2x2 dataset dashboard.

    Args:
        stats: Statistics of the full manifest.
        output: Output file path. Auto-generates if None.
        split_durations: Optional frame indexed by class with ``train`` and
            ``test`` columns in seconds.

    Returns:
        Path to the generated PNG file.
    """
    fig, axes = plt.subplots(2, 2, figsize=(14, 10))
    fig.patch.set_facecolor(COLORS["background"])
    fig.suptitle(f"Dataset Overview ({stats.total_subjects} subjects)",
                 fontsize=16, fontweight="bold", color=COLORS["text"], y=0.98)

    # --- Age groups (top-left) ---
    ax = axes[0, 0]
    _apply_dark_theme(fig, ax)
    _age_heatmap(fig, ax, stats)

    # --- Subjects per class (top-right) ---
    ax = axes[0, 1]
    _apply_dark_theme(fig, ax)
    x = np.arange(len(stats.class_counts))
    ax.bar(x, stats.class_counts.values, color=COLORS["blue"], alpha=0.85, edgecolor="none")
    ax.set_xticks(x)
    ax.set_xticklabels(stats.class_counts.index, rotation=30, ha="right", fontsize=8)
    ax.set_title("Subjects per Class", fontsize=11)
    ax.set_ylabel("Subjects")

    # --- Class x device (bottom-left) ---
    ax = axes[1, 0]
    _apply_dark_theme(fig, ax)
    bottom = np.zeros(len(stats.class_by_device))
    for device in stats.class_by_device.columns:
        values = stats.class_by_device[device].values
        ax.bar(x, values, 0.7, bottom=bottom, label=device,
               color=DEVICE_COLORS.get(device, COLORS["cyan"]), alpha=0.9, edgecolor="none")
        bottom += values
    ax.set_xticks(x)
    ax.set_xticklabels(stats.class_by_device.index, rotation=30, ha="right", fontsize=8)
    ax.set_title("Subjects per Class and Device", fontsize=11)
    _legend(ax)

    # --- Durations (bottom-right) ---
    ax = axes[1, 1]
    _apply_dark_theme(fig, ax)
    if split_durations is not None and not split_durations.empty:
        sx = np.arange(len(split_durations))
        ax.bar(sx - 0.2, split_durations["train"].values, 0.4, label="train",
               color=COLORS["green"], alpha=0.85)
        ax.bar(sx + 0.2, split_durations["test"].values, 0.4, label="test",
               color=COLORS["orange"], alpha=0.85)
        ax.set_xticks(sx)
        ax.set_xticklabels(split_durations.index, rotation=30, ha="right", fontsize=8)
        ax.set_title("Selected Split Duration", fontsize=11)
        _legend(ax)
    else:
        ax.bar(x, stats.class_durations_s.values, color=COLORS["purple"], alpha=0.85)
        ax.set_xticks(x)
        ax.set_xticklabels(stats.class_durations_s.index, rotation=30, ha="right", fontsize=8)
        ax.set_title("Recorded Duration", fontsize=11)
    ax.set_ylabel("Seconds")

    fig.tight_layout(rect=[0, 0, 1, 0.95])
    return _save_chart(fig, output)


def chart_loss(history: pd.DataFrame, output: Optional[str] = None) -> str:
    """Training and validation loss and accuracy per epoch."""
    if history.empty:
        raise ValueError("No training history to chart")

    fig, (loss_ax, acc_ax) = plt.subplots(1, 2, figsize=(14, 5))
    has_val = "val_loss" in history and history["val_loss"].notna().any()
    best = int(history["val_loss"].idxmin()) if has_val else None

    for ax, metric, title, ylabel in (
        (loss_ax, "loss", "Training Loss", "Cross-entropy"),
        (acc_ax, "accuracy", "Training Accuracy", "Accuracy"),
    ):
        _apply_dark_theme(fig, ax)
        if f"train_{metric}" in history:
            ax.plot(history["epoch"], history[f"train_{metric}"], color=COLORS["blue"],
                    linewidth=1.5, marker="o", markersize=3, label="train")
        if f"val_{metric}" in history and history[f"val_{metric}"].notna().any():
            ax.plot(history["epoch"], history[f"val_{metric}"], color=COLORS["pink"],
                    linewidth=1.5, marker="o", markersize=3, label="validation")
        if best is not None:
            epoch = history["epoch"].iloc[best]
            ax.axvline(x=epoch, color=COLORS["green"], linestyle="--", alpha=0.7,
                       linewidth=1, label=f"Best (epoch {epoch})")
        ax.set_title(title, fontsize=14, fontweight="bold", pad=15)
        ax.set_xlabel("Epoch")
        ax.set_ylabel(ylabel)
        _legend(ax)

    acc_ax.set_ylim(0, 1.05)
    plt.tight_layout()
    return _save_chart(fig, output)
