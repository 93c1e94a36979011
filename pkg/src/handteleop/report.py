"""Report figures rendered to files next to the delimited outputs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .control import LATENCY_BAND
from .episode import CorpusStats


def write_stats_csv(stats: CorpusStats, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "frames", "flagged"])
        flagged_paths = {p for p, _, _ in stats.flagged}
        for ep, frames in sorted(stats.frame_histogram.items()):
            w.writerow([ep, frames, "yes" if ep in flagged_paths else "no"])


def save_frame_histogram(stats: CorpusStats, path, frame_range=(200, 600)) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    frames = list(stats.frame_histogram.values())
    if frames:
        ax.hist(frames, bins=20, color="steelblue", edgecolor="black")
    ax.axvline(frame_range[0], color="darkorange", linestyle="--", label="expected range")
    ax.axvline(frame_range[1], color="darkorange", linestyle="--")
    ax.set_xlabel("frames per episode")
    ax.set_ylabel("episodes")
    ax.set_title(f"Corpus: {stats.episode_count} episodes")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_tracking_figure(times, target_positions, actual_positions, path,
                         queue_delays_ms=None) -> None:
    """Target vs actual end-effector trace plus queue-delay strip."""
    target = np.asarray(target_positions)
    actual = np.asarray(actual_positions)
    n_rows = 2 if queue_delays_ms is not None else 1
    fig, axes = plt.subplots(n_rows, 1, figsize=(8, 3.2 * n_rows), squeeze=False)
    ax = axes[0][0]
    err = np.linalg.norm(target - actual, axis=1)
    ax.plot(times, err * 1e3, color="crimson")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("tracking error [mm]")
    ax.set_title("end-effector tracking")
    if queue_delays_ms is not None:
        ax2 = axes[1][0]
        ax2.plot(times, queue_delays_ms, color="steelblue")
        ax2.axhspan(LATENCY_BAND[0] * 1e3, LATENCY_BAND[1] * 1e3,
                    color="orange", alpha=0.2, label="100-300 ms band")
        ax2.set_xlabel("t [s]")
        ax2.set_ylabel("queue delay [ms]")
        ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
