"""Matplotlib figures written next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "sumdecomp",
}


def _figure(width=4.5, height=3.0):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)
    return path


def plot_psi(xs, ys, scale_A, path) -> Path:
    fig, ax = _figure()
    ax.plot(xs, ys, lw=0.6, color="k")
    ax.set_xlim(0, scale_A)
    ax.set_ylim(0, 1)
    ax.set_xlabel("x")
    ax.set_ylabel(r"$\Psi(x)$")
    return _save(fig, path)


def plot_sweep(cells, path) -> Path:
    """RMSE against latent dimension, one line per set size with a 95% band.

    ``cells`` maps ``(M, N)`` to ``(mean, stderr)``.
    """
    fig, ax = _figure()
    sizes = sorted({m for m, _ in cells})
    colours = plt.cm.viridis(np.linspace(0.1, 0.9, max(len(sizes), 1)))
    for colour, m in zip(colours, sizes):
        ns = sorted(n for mm, n in cells if mm == m)
        mean = np.array([cells[(m, n)][0] for n in ns])
        se = np.array([cells[(m, n)][1] for n in ns])
        ax.plot(ns, mean, color=colour, marker="o", ms=2.5, lw=1, label=f"M={m}")
        ax.fill_between(ns, mean - 1.96 * se, mean + 1.96 * se, color=colour, alpha=0.2, lw=0)
        ax.axvline(m, color=colour, ls="--", lw=0.7)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("latent dimension N")
    ax.set_ylabel("RMSE (smoothed, final)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_critical_points(points, path) -> Path:
    fig, ax = _figure(3.5, 3.0)
    ms = [p.set_size for p in points]
    ns = [p.critical_latent_dim for p in points]
    ax.plot(ms, ns, "o", color="C0")
    if ms:
        top = max(max(ms), max(ns))
        ax.plot([0, top], [0, top], ls=":", color="grey", lw=0.8, label="N = M")
        ax.legend(frameon=False)
    ax.set_xlabel("set size M")
    ax.set_ylabel("critical latent dimension")
    return _save(fig, path)
