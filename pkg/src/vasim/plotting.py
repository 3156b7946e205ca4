"""Figures for the report path. Always renders off-screen."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {"figsize": (6.0, 3.6), "dpi": 120}


def _new(**kw):
    fig = Figure(figsize=kw.pop("figsize", STYLE["figsize"]), dpi=STYLE["dpi"])
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    return path


def filter_response(freqs: np.ndarray, mag_db: np.ndarray, cutoff: float, path) -> Path:
    fig, ax = _new()
    ax.plot(freqs, mag_db, lw=1.4, color="tab:blue")
    ax.axvline(cutoff, ls="--", lw=0.8, color="grey")
    ax.axhline(-3.0103, ls=":", lw=0.8, color="grey")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("|H| (dB)")
    ax.set_ylim(max(float(np.min(mag_db)), -80.0) - 5, 5)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def success_bars(labels: Sequence[str], simulated: Sequence[float | None],
                 reference: Sequence[float] | None, path) -> Path:
    fig, ax = _new()
    x = np.arange(len(labels))
    sim = [np.nan if v is None else v for v in simulated]
    width = 0.38 if reference is not None else 0.6
    ax.bar(x - (width / 2 if reference is not None else 0), sim, width, label="simulated")
    if reference is not None:
        ax.bar(x + width / 2, reference, width, label="field study", color="tab:grey")
        ax.legend(frameon=False, loc="upper center", ncol=2)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 1.18)
    ax.set_ylabel("success rate")
    ax.set_xlabel("scenario")
    return _save(fig, path)


def volume_policy(ambient: np.ndarray, activation: np.ndarray, command: np.ndarray,
                  anchors: np.ndarray, path) -> Path:
    fig, ax = _new()
    ax.plot(ambient, activation, label="activation")
    ax.plot(ambient, command, label="command")
    ax.plot(anchors[:, 0], anchors[:, 1], "o", ms=4, color="tab:blue")
    ax.plot(anchors[:, 0], anchors[:, 2], "s", ms=4, color="tab:orange")
    ax.set_xlabel("ambient noise (dB)")
    ax.set_ylabel("playback volume (dB)")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def feature_scatter(x: np.ndarray, y: np.ndarray, labels: Sequence[str], xname: str,
                    yname: str, path) -> Path:
    fig, ax = _new()
    labels = np.asarray(labels)
    for cls in sorted(set(labels)):
        m = labels == cls
        ax.scatter(x[m], y[m], s=6, alpha=0.6, label=cls)
    ax.set_xlabel(xname)
    ax.set_ylabel(yname)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
