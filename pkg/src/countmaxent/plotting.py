"""Report figures written next to the tabular output of ``evaluate``."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG_WIDTH = 6.0
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

plt.rcParams.update(
    {
        "axes.labelsize": 10,
        "font.size": 10,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)


def plot_bic(rows, path):
    """Bar chart of negative log-likelihood plus penalty per model."""
    names = [r["model"] for r in rows]
    nll = np.array([r["neg_log_likelihood"] for r in rows])
    pen = np.array([r["penalty"] for r in rows])
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    x = np.arange(len(names))
    ax.bar(x, nll, color="0.6", label="negative log-likelihood")
    ax.bar(x, pen, bottom=nll, color="C3", label="BIC penalty")
    ax.set_xticks(x, names)
    ax.set_ylabel("nats")
    lo = nll.min() * 0.98
    ax.set_ylim(lo, (nll + pen).max() * 1.01)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_estimates(scores_by_model, path):
    """Observed test frequency against model estimate, one panel per model."""
    names = list(scores_by_model)
    fig, axes = plt.subplots(1, len(names), figsize=(2.6 * len(names), 2.8), squeeze=False)
    for ax, name in zip(axes[0], names):
        scores = scores_by_model[name]
        obs = np.array([s.observed_freq for s in scores])
        exp = np.array([s.expected_freq for s in scores])
        ax.scatter(obs, exp, s=2, alpha=0.3, color="C0", rasterized=True)
        ax.plot([0, 1], [0, 1], color="k", lw=0.6)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_title(name)
        ax.set_xlabel("observed")
    axes[0][0].set_ylabel("expected")
    return _save(fig, path)


def plot_buckets(observed, fitted, path, title=""):
    """Empirical statistic histogram against the model's bucket probabilities."""
    k = np.arange(len(observed))
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    ax.bar(k, observed, color="0.75", label="data")
    ax.plot(k, fitted, "o", ms=3, color="C1", label="model")
    ax.set_xlabel("k")
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)
