"""Figure rendering for the CLI report paths.

Every CLI command that emits a data CSV can also render the matching figure
to an image file.  Rendering is deterministic: the Agg backend, fixed figure
geometry, and PNG metadata stripped of its date, so reruns produce
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_threshold_figure",
    "save_sweep_figure",
    "save_calibration_figure",
    "save_rademacher_figure",
]

_SAVE_OPTS = {"dpi": 150, "metadata": {"Date": None}}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_threshold_figure(alphas, ms, values, path) -> None:
    """Critical-value surface: a curve when one axis is a single point, else a heatmap."""
    alphas = list(alphas)
    ms = list(ms)
    grid = np.asarray(values, dtype=float).reshape(len(alphas), len(ms))
    if len(alphas) == 1:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(ms, grid[0], marker="o", ms=3)
        ax.set_xlabel("sample size m")
        ax.set_ylabel("critical value")
        ax.set_title(f"threshold convergence, alpha={alphas[0]:g}")
    elif len(ms) == 1:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(alphas, grid[:, 0], marker="o", ms=3)
        ax.set_xlabel("alpha")
        ax.set_ylabel("critical value")
        ax.set_title(f"threshold vs alpha, m={ms[0]}")
    else:
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        mesh = ax.pcolormesh(ms, alphas, grid, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="critical value")
        ax.set_xlabel("sample size m")
        ax.set_ylabel("alpha")
        ax.set_title("test threshold over (alpha, m)")
    _finish(fig, path)


def save_sweep_figure(rhos, jdds, critical, path, means=None, lows=None, highs=None) -> None:
    """Discrepancy against rotation angle with the rejection threshold overlaid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(rhos, jdds, marker="o", ms=3.5, label="JDD")
    if means is not None:
        ax.plot(rhos, means, color="tab:orange", lw=1.0, label="trial mean")
        ax.fill_between(rhos, lows, highs, color="tab:orange", alpha=0.25, label="trial range")
    ax.axhline(critical, color="tab:green", lw=1.5, label="critical value")
    ax.set_xlabel("rotation (degrees)")
    ax.set_ylabel("JDD")
    ax.set_title("joint discrepancy under rotation shift")
    ax.legend()
    _finish(fig, path)


def save_calibration_figure(jdds, critical, rate, path) -> None:
    """Null-simulation histogram with the threshold marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(jdds, bins=30, color="tab:blue", alpha=0.8)
    ax.axvline(critical, color="tab:green", lw=1.5, label="critical value")
    ax.set_xlabel("JDD under the null")
    ax.set_ylabel("trials")
    ax.set_title(f"null calibration, rejection rate {rate:g}")
    ax.legend()
    _finish(fig, path)


def save_rademacher_figure(m, mc_mean, mc_se, jensen, k_over_sqrt_m, path) -> None:
    """Ordering chain: Monte Carlo mean (+/- 3 s.e.) vs the two deterministic bounds."""
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.errorbar([0], [mc_mean], yerr=[3 * mc_se], fmt="o", capsize=5, label="MC mean ± 3 s.e.")
    ax.scatter([1], [jensen], marker="_", s=400, color="tab:orange", label="Jensen bound")
    ax.scatter([2], [k_over_sqrt_m], marker="_", s=400, color="tab:green", label="K / sqrt(m)")
    ax.set_xticks([0, 1, 2], ["MC mean", "Jensen", "K/sqrt(m)"])
    ax.set_xlim(-0.6, 2.6)
    ax.set_ylabel("signed-supremum value")
    ax.set_title(f"Rademacher ordering chain, m={m}")
    ax.legend(loc="lower left", fontsize=8)
    _finish(fig, path)
