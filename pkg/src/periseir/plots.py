"""PNG figure rendering for the CLI (Agg backend, no display needed)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def save_trajectory_plot(traj, path, labels=("S", "E", "I", "R"), title=None):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ts = traj.grid.nodes()
    for j, label in enumerate(labels):
        ax.plot(ts, traj.values[:, j], label=label, lw=1.2)
    ax.set_xlabel("time (years)")
    ax.set_ylabel("population fraction")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_fit_plot(month_labels, empiric, predicted, path):
    n = len(empiric)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    x = np.arange(n)
    ax.plot(x, empiric, "o-", ms=4, lw=1.0, label="reported")
    ax.plot(x, predicted, "s--", ms=3.5, lw=1.0, label="model")
    step = max(1, n // 12)
    ax.set_xticks(x[::step])
    ax.set_xticklabels(month_labels[::step], rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("cases per month")
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_control_plot(solution, path):
    """Three stacked panels: states, costates, control."""
    ts = solution.states.grid.nodes()
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for j, label in enumerate(("S", "E", "I", "R")):
        axes[0].plot(ts, solution.states.values[:, j], label=label, lw=1.0)
    axes[0].set_ylabel("fraction")
    axes[0].legend(loc="best", fontsize=8, ncol=4)
    for j, label in enumerate(("p1", "p2", "p3", "p4")):
        axes[1].plot(ts, solution.costates.values[:, j], label=label, lw=1.0)
    axes[1].set_ylabel("costate")
    axes[1].legend(loc="best", fontsize=8, ncol=4)
    axes[2].plot(ts, solution.control.values, color="tab:red", lw=1.2)
    axes[2].set_ylabel("treatment rate")
    axes[2].set_xlabel("time (years)")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_efficacy_plot(ts, efficacy, path):
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(ts, efficacy, lw=1.2, color="tab:green")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("time (years)")
    ax.set_ylabel("efficacy")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_sensitivity_plot(indices, path):
    """Grouped bars, one group per parameter, one bar per formula mode."""
    params = sorted({ix.parameter for ix in indices},
                    key=[ix.parameter for ix in indices].index)
    modes = sorted({ix.mode for ix in indices},
                   key=[ix.mode for ix in indices].index)
    width = 0.8 / len(modes)
    fig, ax = plt.subplots(figsize=(7, 4))
    for m, mode in enumerate(modes):
        xs, ys = [], []
        for p, name in enumerate(params):
            for ix in indices:
                if ix.parameter == name and ix.mode == mode:
                    xs.append(p + (m - (len(modes) - 1) / 2) * width)
                    ys.append(ix.value)
        ax.bar(xs, ys, width=width, label=mode)
    ax.set_xticks(range(len(params)))
    ax.set_xticklabels(params)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_ylabel("sensitivity index")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
