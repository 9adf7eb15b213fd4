"""Render sweep summaries and solver traces to image files.

Input is always a CSV produced by the opinion-opt CLI; this package never
calls the solver. Columns are located by header name, so column order is
free. A (method, c) pair absent from a summary leaves a gap in that method's
line: the series carries NaN there and matplotlib breaks the segment.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

KINDS = ("objective_vs_c", "time_vs_c", "convergence_trace")

# fixed per-method look so the same CSV always renders the same figure
METHOD_STYLES = {
    "pgm_chanplus_start": {"color": "#1f77b4", "marker": "o", "linestyle": "-"},
    "pgm_init_start": {"color": "#ff7f0e", "marker": "s", "linestyle": "-"},
    "grad_chanplus": {"color": "#2ca02c", "marker": "^", "linestyle": "--"},
    "grad_init": {"color": "#d62728", "marker": "v", "linestyle": "--"},
    "columnsum": {"color": "#9467bd", "marker": "D", "linestyle": ":"},
}
FALLBACK_COLORS = ("#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

FIGSIZE = (6.4, 4.2)
DPI = 150


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    out_path: str
    styles: dict | None = None  # method name -> matplotlib line kwargs
    log_y: bool | None = None   # None: kind default (log for time_vs_c)
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {', '.join(KINDS)}")


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    return rows[0], rows[1:]


def _column(header, name, path):
    try:
        return header.index(name)
    except ValueError:
        raise ValueError(f"{path}: missing column '{name}'") from None


def _style_for(method, rank, styles):
    if styles and method in styles:
        return dict(styles[method])
    if method in METHOD_STYLES:
        return dict(METHOD_STYLES[method])
    return {"color": FALLBACK_COLORS[rank % len(FALLBACK_COLORS)],
            "marker": "x", "linestyle": "-"}


def _summary_series(spec, value_column):
    header, rows = _read_csv(spec.csv_path)
    i_method = _column(header, "method", spec.csv_path)
    i_c = _column(header, "c", spec.csv_path)
    i_val = _column(header, value_column, spec.csv_path)

    methods = []  # first-appearance order
    cells = {}
    for row in rows:
        method = row[i_method]
        if method not in cells:
            methods.append(method)
            cells[method] = {}
        cells[method][float(row[i_c])] = float(row[i_val])

    grid = sorted({c for per in cells.values() for c in per})
    series = {m: np.array([cells[m].get(c, np.nan) for c in grid])
              for m in methods}
    return np.array(grid), methods, series


def _plot_summary(spec, ax, value_column, ylabel):
    grid, methods, series = _summary_series(spec, value_column)
    for rank, method in enumerate(methods):
        ax.plot(grid, series[method], label=method, markersize=4,
                **_style_for(method, rank, spec.styles))
    ax.set_xlabel("budget fraction c")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    log_y = spec.log_y
    if log_y is None:
        log_y = spec.kind == "time_vs_c"  # timing spreads span decades
    if log_y:
        ax.set_yscale("log")


def _plot_trace(spec, ax):
    header, rows = _read_csv(spec.csv_path)
    i_sec = _column(header, "seconds", spec.csv_path)
    i_obj = _column(header, "objective", spec.csv_path)
    seconds = np.array([float(r[i_sec]) for r in rows])
    objective = np.array([float(r[i_obj]) for r in rows])
    ax.plot(seconds, objective, color="#1f77b4", marker=".", markersize=3)
    ax.set_xlabel("seconds")
    ax.set_ylabel("objective")
    if spec.log_y:
        ax.set_yscale("log")


def build_figure(spec: FigureSpec) -> Figure:
    """The figure for a spec, not yet written anywhere. render() saves it."""
    fig = Figure(figsize=FIGSIZE, dpi=DPI)
    ax = fig.add_subplot()
    if spec.kind == "objective_vs_c":
        _plot_summary(spec, ax, "mean_objective", "mean objective")
    elif spec.kind == "time_vs_c":
        _plot_summary(spec, ax, "mean_seconds", "mean seconds")
    else:
        _plot_trace(spec, ax)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    fig = build_figure(spec)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=_stable_metadata(out))
    return out


def _stable_metadata(out):
    # strip writer timestamps so identical input gives identical bytes
    suffix = out.suffix.lower()
    if suffix == ".png":
        return {"Software": "opinion-opt-plotting"}
    if suffix == ".svg":
        return {"Date": None}
    if suffix in (".pdf", ".ps", ".eps"):
        return {"CreationDate": None}
    return None
