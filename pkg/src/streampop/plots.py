"""Figure rendering for the report path.

Figures are PNG companions to the delimited payloads, drawn headless so the
command line works without a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_lines(path, title: str, xlabel: str, ylabel: str, curves, logx: bool = False) -> Path:
    """Draw labeled curves to a PNG. curves: iterable of (label, x, y)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, x, y in curves:
        ax.plot(x, y, label=label, linewidth=1.5)
    if logx:
        ax.set_xscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
