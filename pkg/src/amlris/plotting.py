"""Figure rendering for the report paths (similarity maps, masks, training
curves). Uses the non-interactive Agg backend; every function writes a file
and closes its figure."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# PNG metadata without a version stamp keeps files byte-stable across runs
_SAVE_KW = {"dpi": 100, "metadata": {"Software": None}}


def _style(ax, title=None, xlabel=None, ylabel=None):
    if title:
        ax.set_title(title, fontsize=10)
    if xlabel:
        ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    ax.tick_params(labelsize=8)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(os.fspath(path), **_SAVE_KW)
    plt.close(fig)


def plot_similarity_map(sim, path, tau=None, title="patch alignment S"):
    grid = sim.grid if hasattr(sim, "grid") else np.asarray(sim)
    fig, ax = plt.subplots(figsize=(4, 3.4))
    im = ax.imshow(grid, cmap="viridis", vmin=0.0, vmax=1.0, interpolation="nearest")
    cbar = fig.colorbar(im, ax=ax)
    if tau is not None:
        cbar.ax.axhline(tau, color="r", lw=1)
    _style(ax, title)
    _save(fig, path)


def plot_masked_image(image, masked, mask, path):
    """Original, block mask and masked image side by side."""
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
    axes[0].imshow(image.pixels)
    axes[1].imshow(mask.bits, cmap="gray_r", vmin=0, vmax=1, interpolation="nearest")
    axes[2].imshow(masked.pixels)
    for ax, t in zip(axes, ("input", f"blocks ({mask.masked_fraction:.0%} masked)", "masked")):
        _style(ax, t)
        ax.set_xticks([])
        ax.set_yticks([])
    _save(fig, path)


def plot_train_history(history, path, baseline=None):
    epochs = np.arange(1, len(history) + 1)
    fig, (ax_l, ax_m) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax_l.plot(epochs, history.loss, "o-", ms=3, label="AML")
    if baseline is not None:
        ax_l.plot(epochs, baseline.loss, "s--", ms=3, label="no masking")
        ax_l.legend(fontsize=8)
    _style(ax_l, "segmentation loss", "epoch", "mean loss")
    ax_m.plot(epochs, history.masked_fraction, "o-", ms=3, label="masked fraction")
    ax_m.plot(epochs, history.mean_s, "^-", ms=3, label="mean S")
    ax_m.set_ylim(0.0, 1.05)
    ax_m.legend(fontsize=8)
    _style(ax_m, "masking stage", "epoch")
    _save(fig, path)


def plot_error_histogram(errors, path, epsilon=None, title="distortion"):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.hist(np.asarray(errors), bins=60, color="0.4")
    if epsilon is not None and np.isfinite(epsilon):
        for x in (-epsilon, epsilon):
            ax.axvline(x, color="r", lw=1)
    _style(ax, title, "error", "trials")
    _save(fig, path)
