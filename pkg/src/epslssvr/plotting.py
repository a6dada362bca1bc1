"""Figures for the gap sweep and the sinc demo.

Uses the non-interactive Agg backend and strips timestamps from saved
files so figures are byte-reproducible.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1.0) / 2.0

STYLE = {
    "figure.dpi": 150,
    "savefig.bbox": "tight",
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.5,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "epslssvr",
}

_NO_DATES = {
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None, "ModDate": None},
    ".png": {"Software": None},
}


def save(fig, path):
    """Write `fig` to `path` atomically (temp file in the same folder, then rename)."""
    path = os.fspath(path)
    root, ext = os.path.splitext(path)
    tmp = f"{root}.tmp-{os.getpid()}{ext}"
    try:
        fig.savefig(tmp, metadata=_NO_DATES.get(ext.lower()))
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.remove(tmp)


def plot_gap_sweep(report, path, title=None):
    """Two panels against ``-log10(eps)``: prediction ARSE and parameter gap norm."""
    finite = [i for i, e in enumerate(report.exponents) if np.isfinite(e)]
    t = np.array([report.exponents[i] for i in finite])
    gap = report.gap_norms[finite]
    err = report.arses[finite]
    with plt.rc_context(STYLE):
        width = 7.0
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(width, width * GOLDEN / 2))
        ax1.plot(t, err, marker="p", color="tab:blue", mfc="magenta", mec="magenta")
        ax1.set_xlabel(r"$-\log_{10}\epsilon$")
        ax1.set_ylabel("ARSE")
        ax2.plot(t, gap, marker="p", color="tab:blue", mfc="magenta", mec="magenta")
        ax2.set_xlabel(r"$-\log_{10}\epsilon$")
        ax2.set_ylabel(r"$\|\mu^\star_\epsilon - \theta_{LS}\|$")
        for ax in (ax1, ax2):
            ax.set_ylim(bottom=0)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        save(fig, path)


def plot_sinc_demo(x, true, mean, var, train_range, path):
    """Predictive mean with a one-standard-deviation band over the target curve."""
    sd = np.sqrt(np.maximum(var, 0.0))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 6.0 * GOLDEN))
        ax.fill_between(x, mean - sd, mean + sd, color="tab:blue", alpha=0.3, lw=0, label=r"$\pm 1$ sd")
        ax.plot(x, true, "k--", lw=1.0, label="sinc")
        ax.plot(x, mean, "--", color="magenta", label="predictive mean")
        for edge in train_range:
            ax.axvline(edge, color="red", ls="--", lw=0.6)
        ax.set_xlim(x[0], x[-1])
        ax.set_xlabel("$x$")
        ax.set_ylabel("$f(x)$")
        ax.legend(loc="upper right")
        fig.tight_layout()
        save(fig, path)
