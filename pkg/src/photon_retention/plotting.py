"""Static figures written next to the CSV output (SVG by default)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "svg.hashsalt": "photon-retention",  # stable element ids across reruns
        "svg.fonttype": "none",
    }
)


def figure_size(width_mm: float = 140.0):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    w = width_mm / 25.4
    return (w, w * golden)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)
    return path


def line_chart(path, curves, xlabel: str, ylabel: str, title: str = "", logy: bool = False) -> Path:
    """``curves`` is a list of ``(x, y, label)``; non-positive values are dropped on a log axis."""
    fig, ax = plt.subplots(figsize=figure_size())
    for x, y, label in curves:
        x, y = np.asarray(x), np.asarray(y)
        if logy:
            keep = y > 0
            x, y = x[keep], y[keep]
        ax.plot(x, y, lw=1.0, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if any(c[2] for c in curves):
        ax.legend(frameon=False)
    return _save(fig, path)


def spectrum_plot(path, spectrum, title: str = "", logy: bool = False, span_thz: float | None = None) -> Path:
    x = spectrum.freq_offset / 1e12
    y = spectrum.normalized_power
    if span_thz is None:
        # show the region carrying power above 1e-6 of the peak, padded
        above = np.nonzero(y > 1e-6)[0]
        if above.size:
            lo, hi = x[above[0]], x[above[-1]]
            pad = 0.1 * (hi - lo) + 1e-3
            span = (lo - pad, hi + pad)
        else:
            span = (x[0], x[-1])
    else:
        span = (-span_thz, span_thz)
    keep = (x >= span[0]) & (x <= span[1])
    return line_chart(
        path,
        [(x[keep], y[keep], "")],
        "frequency offset (THz)",
        "normalized power",
        title,
        logy,
    )


def scan_plot(path, swept, values, xlabel: str, ylabel: str, title: str = "", logy: bool = True, fit=None) -> Path:
    curves = [(swept, values, "simulation")]
    if fit is not None:
        amp, rate, _res = fit
        curves.append((swept, amp * np.exp(-rate * np.asarray(swept) * 1e-15), f"fit, rate {rate:.3g} 1/s"))
    return line_chart(path, curves, xlabel, ylabel, title, logy)
