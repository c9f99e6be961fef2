"""Figure rendering for compare curve CSV files."""

from .render import (
    CurveFile,
    EXPECTED_HEADER,
    FigureSpec,
    ImageFormat,
    LANDMARK_KEYS,
    SchemaError,
    build_figure,
    main,
    parse_curve_csv,
    unit_crossing_cell,
)
from .render import render as render_figure

__all__ = [
    "CurveFile",
    "EXPECTED_HEADER",
    "FigureSpec",
    "ImageFormat",
    "LANDMARK_KEYS",
    "SchemaError",
    "build_figure",
    "main",
    "parse_curve_csv",
    "render_figure",
    "unit_crossing_cell",
]

__version__ = "0.1.0"
