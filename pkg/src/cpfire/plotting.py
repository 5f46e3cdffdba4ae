"""Figures written next to the CSV output of each CLI subcommand."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["figure.figsize"] = (5.0, 3.5)
plt.rcParams["figure.dpi"] = 120
plt.rcParams["savefig.bbox"] = "tight"
plt.rcParams["axes.spines.top"] = False
plt.rcParams["axes.spines.right"] = False

# no Software/date chunks, so reruns give identical bytes
_META = {"Software": None}
COLORS = {0: "#ffffff", 1: "#d95f02", 2: "#1b9e77"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def density_figure(path: Path, times, n1, n2, size: int, title: str = "") -> Path:
    fig, ax = plt.subplots()
    ax.plot(times, np.asarray(n1) / size, color=COLORS[1], label="type 1")
    ax.plot(times, np.asarray(n2) / size, color=COLORS[2], label="type 2")
    ax.set_xlabel("t")
    ax.set_ylabel("density")
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def lattice_figure(path: Path, grid, title: str = "") -> Path:
    from matplotlib.colors import ListedColormap

    fig, ax = plt.subplots(figsize=(4, 4))
    cmap = ListedColormap([COLORS[0], COLORS[1], COLORS[2]])
    ax.imshow(grid, cmap=cmap, vmin=0, vmax=2, origin="lower", interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    return _save(fig, path)


def estimate_figure(path: Path, x, values, lo, hi, xlabel: str, ylabel: str = "estimate",
                    groups=None, reference=None, logx: bool = False) -> Path:
    """Points with 95% error bars, one series per distinct ``groups`` label."""
    fig, ax = plt.subplots()
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    labels = np.asarray(groups if groups is not None else [""] * len(x))
    for g in dict.fromkeys(labels.tolist()):
        m = labels == g
        ax.errorbar(x[m], v[m], yerr=[v[m] - lo[m], hi[m] - v[m]], fmt="o-", capsize=3, label=g or None)
    if reference is not None:
        ax.plot(x, reference, "k--", lw=1, label="closed form")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if groups is not None or reference is not None:
        ax.legend(frameon=False)
    return _save(fig, path)


def shape_figure(path: Path, hit_time, times, radius, fit) -> Path:
    fig, (a0, a1) = plt.subplots(1, 2, figsize=(8, 3.5))
    h = np.where(np.isfinite(hit_time), hit_time, np.nan)
    im = a0.imshow(h, origin="lower", cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=a0, label="first hit time")
    a0.set_xticks([])
    a0.set_yticks([])
    a1.plot(times, radius, "o", ms=3)
    if np.isfinite(fit.get("slope", np.nan)):
        a1.plot(times, fit["intercept"] + fit["slope"] * np.asarray(times), "k--", lw=1,
                label=f"slope {fit['slope']:.3f}, R2 {fit['r2']:.4f}")
        a1.legend(frameon=False)
    a1.set_xlabel("t")
    a1.set_ylabel("sqrt(area) / 2")
    return _save(fig, path)
