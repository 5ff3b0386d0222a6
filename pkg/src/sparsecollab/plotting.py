"""Sweep figures (SVG) and gnuplot-style data files.

Figures are built on a bare ``Figure`` so nothing depends on the pyplot
state machine or on an interactive backend.
"""

from __future__ import annotations

import math

import matplotlib
from matplotlib.figure import Figure

# what each sweep axis is called on a figure
AXIS_LABELS = {
    "dnorm": r"$D_{\mathrm{norm}}$",
    "jcheck": r"$\check{J}$",
    "budget": r"energy budget $\hat{P}$",
    "alpha_c": r"$\alpha_c$",
    "alpha_s": r"$\alpha_s$",
    "noise_ratio": r"$\zeta^2/\xi^2$",
}

COLUMN_LABELS = {
    "P": "total energy",
    "T": "transmission energy",
    "Q": "collaboration cost",
    "S": "selection cost",
    "J": "Fisher information",
    "D_norm": r"$D_{\mathrm{norm}}$",
    "card": "active links",
    "per_w": "link percentage (%)",
    "selected": "selected sensors",
    "T_share": "transmission share",
}

# panels drawn for each axis
PANELS = {
    "dnorm": ("P", "card"),
    "jcheck": ("P", "card"),
    "budget": ("D_norm", "card"),
    "alpha_c": ("P", "card"),
    "alpha_s": ("selected", "card"),
    "noise_ratio": ("T_share", "per_w"),
}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "legend.frameon": False,
    "svg.hashsalt": "sparsecollab",  # stable element ids, so reruns are byte-identical
}


def _value(row: dict, col: str):
    if col == "T_share":
        if row.get("T") is None or not row.get("P"):
            return None
        return row["T"] / row["P"]
    return row.get(col)


def _log_axis(xs) -> bool:
    pos = [x for x in xs if x > 0]
    return len(pos) == len(xs) and len(xs) > 1 and max(pos) / min(pos) >= 100


def sweep_figure(rows: list[dict], axis: str, columns=None) -> Figure:
    columns = tuple(columns or PANELS.get(axis, ("P", "card")))
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(3.5, 1.6 * len(columns) + 0.6))
        axes = fig.subplots(len(columns), 1, sharex=True, squeeze=False)[:, 0]
        xs_all = [r["axis_value"] for r in rows]
        for ax, col in zip(axes, columns):
            pts = [(r["axis_value"], _value(r, col)) for r in rows]
            pts = [(x, y) for x, y in pts if y is not None]
            if pts:
                ax.plot(*zip(*pts), "o-", color="k", markerfacecolor="w")
            ax.set_ylabel(COLUMN_LABELS.get(col, col))
            ax.grid(True, lw=0.3, alpha=0.5)
            if _log_axis(xs_all):
                ax.set_xscale("log")
        axes[-1].set_xlabel(AXIS_LABELS.get(axis, axis))
        fig.align_ylabels(axes)
        fig.tight_layout()
    return fig


def save_sweep_svg(rows: list[dict], axis: str, path, columns=None) -> None:
    fig = sweep_figure(rows, axis, columns)
    with matplotlib.rc_context(RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def write_dat(rows: list[dict], columns, path, header: str = "") -> None:
    """Whitespace-separated columns, ``#`` comments, ``nan`` for missing values."""
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        fh.write("# " + " ".join(columns) + "\n")
        for r in rows:
            vals = []
            for c in columns:
                v = _value(r, c)
                vals.append("nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{float(v):.10g}")
            fh.write(" ".join(vals) + "\n")
