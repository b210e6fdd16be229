"""Figure rendering for the experiment reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_metric_curves(t, asr, acv, path, title: str = "") -> str:
    """Log-log average regret and violation curves against the horizon."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    axes[0].loglog(t, asr, lw=1.2)
    axes[0].set_xlabel("T")
    axes[0].set_ylabel("average system regret")
    axes[1].loglog(t, _floor_positive(acv), lw=1.2, color="tab:red")
    axes[1].set_xlabel("T")
    axes[1].set_ylabel("average constraint violation")
    for ax in axes:
        ax.grid(True, which="both", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path).name


def plot_comparison(t, offline, agent1, agent2, path) -> str:
    """First-coordinate time series: repeated offline optimiser vs online agents."""
    fig, ax = plt.subplots(figsize=(8, 3.4))
    ax.plot(t, offline, lw=0.7, alpha=0.7, label="repeated offline optimizer")
    ax.plot(t, agent1, lw=1.4, label="online agent 1")
    ax.plot(t, agent2, lw=1.4, label="online agent 2")
    ax.set_xlabel("t")
    ax.set_ylabel("first coordinate")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path).name


def plot_dispatch_residuals(primal, dual, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.4))
    it = range(1, len(primal) + 1)
    ax.semilogy(it, _floor_positive(primal), label="primal residual")
    ax.semilogy(it, _floor_positive(dual), label="dual residual")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path).name


def plot_regret(t, avg_regret, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.loglog(t, _floor_positive(avg_regret), lw=1.2)
    ax.set_xlabel("T")
    ax.set_ylabel("regret / T")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path).name


def _floor_positive(values, eps: float = 1e-16):
    """Clip at a tiny positive floor so log axes tolerate exact zeros."""
    import numpy as np

    return np.maximum(np.asarray(values, dtype=float), eps)
