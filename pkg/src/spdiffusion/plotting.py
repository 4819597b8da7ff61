"""Render tidy plot data to image files.

Only imported when a figure is requested; matplotlib is an optional
dependency and runs on the non-interactive ``Agg`` backend.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path


def _load(path):
    series = defaultdict(lambda: ([], []))
    meta = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            xs, ys = series[(row["panel"], row["series"])]
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
            meta[row["panel"]] = (row["xlabel"], row["ylabel"])
    return series, meta


def render(plot_data, out_dir, fmt="png") -> list:
    """Draw one figure per panel of a tidy CSV; returns the written paths."""
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("plotting needs matplotlib (pip install 'spdiffusion[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series, meta = _load(plot_data)
    panels = sorted({p for p, _ in series})
    written = []
    for panel in panels:
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for (p, name), (xs, ys) in sorted(series.items()):
            if p != panel:
                continue
            ax.plot(xs, ys, label=name, lw=1.2)
        xl, yl = meta[panel]
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_title(panel)
        if sum(1 for p, _ in series if p == panel) <= 10:
            ax.legend(fontsize=7)
        fig.tight_layout()
        path = Path(out_dir) / f"{panel}.{fmt}"
        fig.savefig(path, dpi=120, metadata={"Software": None} if fmt == "png" else None)
        plt.close(fig)
        written.append(str(path))
    return written
