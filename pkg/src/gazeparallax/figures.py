"""Matplotlib figure rendering for the CLI report paths (headless, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .psychophysics import PsychometricFit, psychometric


def save_tradeoff_figure(header: list[str], rows: np.ndarray, path) -> None:
    """Plot parallax-vs-acuity curves from a tradeoff table and save to file.

    One solid curve per relative distance, dashed red MAR line, dashed blue
    display pitch line; same columns the CSV carries.
    """
    ecc = rows[:, 0]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for j, name in enumerate(header):
        if not name.startswith("parallax_deg_dd"):
            continue
        label = name.removeprefix("parallax_deg_dd") + " D"
        ax.plot(ecc, rows[:, j], label=label)
    ax.plot(ecc, rows[:, -2], "r--", label="MAR")
    ax.plot(ecc, rows[:, -1], "b--", label="display pitch")
    ax.set_xlabel("eccentricity (degrees)")
    ax.set_ylabel("visual angle (degrees)")
    ax.set_title("Parallax magnitude vs. acuity falloff")
    ax.legend(loc="upper left", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_psychometric_figure(groups: dict, path) -> None:
    """Plot fitted psychometric curves with their binned data points.

    ``groups`` maps a label to (levels_data, PsychometricFit) where
    levels_data is a list of (level, n_trials, n_correct).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x_max = 0.0
    for label, (levels, fit) in groups.items():
        xs = np.array([row[0] for row in levels], dtype=float)
        ps = np.array([row[2] / row[1] for row in levels])
        x_max = max(x_max, float(xs.max()))
        (line,) = ax.plot(xs, ps, "o", label=f"{label} (t75={fit.threshold75:.3f} D)")
        grid = np.linspace(0.0, 1.1 * float(xs.max()), 200)
        ax.plot(grid, psychometric(grid, fit.alpha, fit.beta, fit.lapse), "-", color=line.get_color())
    ax.axhline(0.75, color="gray", linestyle=":", linewidth=1)
    ax.set_xlim(0.0, 1.1 * max(x_max, 1e-6))
    ax.set_ylim(0.4, 1.02)
    ax.set_xlabel("relative distance (diopters)")
    ax.set_ylabel("proportion correct")
    ax.set_title("Psychometric fits")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_threshold_line_figure(pedestals, thresholds, slope: float, intercept: float, path) -> None:
    """Discrimination thresholds vs. pedestal with the fitted Weber line."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(pedestals, thresholds, "ko", label="thresholds")
    grid = np.linspace(0.0, max(pedestals) * 1.1, 50)
    ax.plot(grid, slope * grid + intercept, "b-", label=f"{slope:.3f} x + {intercept:.3f} D")
    ax.set_xlabel("pedestal offset (diopters)")
    ax.set_ylabel("discrimination threshold (diopters)")
    ax.legend(loc="upper left", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
