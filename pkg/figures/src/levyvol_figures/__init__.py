from .render import (
    DEFAULT_LABELS,
    KINDS,
    REQUIRED_COLUMNS,
    FigureSpec,
    SchemaError,
    build_figure,
    render,
)

__all__ = [
    "DEFAULT_LABELS",
    "KINDS",
    "REQUIRED_COLUMNS",
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "render",
]
