"""Render estimator figures from tidy CSV tables.

The plotting layer holds no statistics of its own: everything shown comes
from CSVs written by the levyvol harness (schemas in that package's
README).  Rendering is deterministic — fixed style, fixed dpi, fixed PNG
metadata, no timestamps — so identical inputs produce identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import pandas as pd  # noqa: E402

KINDS = ("boxplot", "histogram", "lambda-curve", "surface")

REQUIRED_COLUMNS = {
    "boxplot": ("n", "lambda", "rel_error"),
    "histogram": ("lambda", "rank", "count"),
    "lambda-curve": ("lambda", "variant", "median_rel_error"),
    "surface": ("re_w", "im_w", "error"),
}

DEFAULT_LABELS = {
    "boxplot": ("sample size n", "relative error"),
    "histogram": ("numerical rank", "replicates"),
    "lambda-curve": ("penalty lambda", "median relative error"),
    "surface": ("Re w", "Im w"),
}

# frozen style so reruns are byte-identical and versions look alike
STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "levyvol-figures",
}

_PNG_METADATA = {"Software": "levyvol-figures"}


class SchemaError(ValueError):
    """Input CSV is missing columns the figure kind requires."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: a kind, its input table, the output path, axis labels."""

    kind: str
    input_csv: str
    output: str
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _load(spec: FigureSpec) -> pd.DataFrame:
    df = pd.read_csv(spec.input_csv)
    missing = [c for c in REQUIRED_COLUMNS[spec.kind] if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{spec.input_csv}: missing column(s) {', '.join(missing)} "
            f"for kind {spec.kind!r} (found: {', '.join(df.columns)})"
        )
    if df.empty:
        raise SchemaError(f"{spec.input_csv}: no data rows")
    return df


def _boxplot(ax, df):
    # one box per (n, lambda) cell; drop the lambda line when it is constant
    single_lam = df["lambda"].nunique() == 1
    groups = sorted(df.groupby(["n", "lambda"]), key=lambda kv: kv[0])
    data = [g["rel_error"].to_numpy() for _, g in groups]
    labels = [
        f"{int(n)}" if single_lam else f"n={int(n)}\nλ={lam:g}"
        for (n, lam), _ in groups
    ]
    ax.boxplot(data, tick_labels=labels, patch_artist=True,
               boxprops={"facecolor": "#a6cee3"}, medianprops={"color": "#e31a1c"})


def _histogram(ax, df):
    ranks = sorted(df["rank"].unique())
    lams = sorted(df["lambda"].unique())
    width = 0.8 / len(lams)
    for i, lam in enumerate(lams):
        sub = df[df["lambda"] == lam].set_index("rank")["count"]
        xs = [r + (i - (len(lams) - 1) / 2) * width for r in ranks]
        ax.bar(xs, [sub.get(r, 0) for r in ranks], width=width,
               label=f"λ={lam:g}")
    ax.set_xticks(ranks)
    if len(lams) > 1:
        ax.legend()


def _lambda_curve(ax, df):
    for variant, sub in sorted(df.groupby("variant")):
        sub = sub.sort_values("lambda")
        ax.plot(sub["lambda"], sub["median_rel_error"], marker="o", label=variant)
    if (df["lambda"] > 0).all():
        ax.set_xscale("log")
    ax.legend()


def _surface(ax, df, fig):
    tri = ax.tripcolor(df["re_w"], df["im_w"], df["error"], cmap="viridis")
    ax.set_aspect("equal")
    fig.colorbar(tri, ax=ax, label="error")


def build_figure(spec: FigureSpec):
    """Build (but do not save) the matplotlib Figure for a spec."""
    df = _load(spec)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if spec.kind == "boxplot":
            _boxplot(ax, df)
        elif spec.kind == "histogram":
            _histogram(ax, df)
        elif spec.kind == "lambda-curve":
            _lambda_curve(ax, df)
        else:
            _surface(ax, df, fig)
        xdef, ydef = DEFAULT_LABELS[spec.kind]
        ax.set_xlabel(spec.xlabel or xdef)
        ax.set_ylabel(spec.ylabel or ydef)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Render the spec to its output path; returns the path written."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, format="png", metadata=_PNG_METADATA)
    finally:
        plt.close(fig)
    return out
