"""Figure rendering for run artifacts.

Every report path writes plain CSV series and a rendered PNG next to it, so
results can be read by any tool while remaining glanceable.  The Agg backend
is forced; nothing here ever opens a window.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def convergence_figure(iterations, objectives, path, ylabel="objective"):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(iterations, objectives, lw=1.0, color="#b0342b")
    best = np.minimum.accumulate(objectives) if len(objectives) else []
    if len(objectives):
        ax.plot(iterations, best, lw=1.6, color="#1f4f82", label="best seen")
        ax.legend(frameon=False)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    _save(fig, path)


def spectrum_figure(eigenvalues, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(range(len(eigenvalues)), eigenvalues, ".", ms=4, color="#1f4f82")
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    _save(fig, path)


def error_bar_figure(labels, errors, path, ylabel="absolute error",
                     hline=None):
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.bar(range(len(errors)), errors, color="#1f4f82")
    if hline is not None:
        ax.axhline(hline, color="#b0342b", lw=1.0, ls="--")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel(ylabel)
    _save(fig, path)


def series_figure(x, ys: dict, path, xlabel, ylabel, logy=False):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for label, y in ys.items():
        ax.plot(x, y, "o-", ms=3, lw=1.2, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(ys) > 1:
        ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    _save(fig, path)
