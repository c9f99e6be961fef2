"""Quotient-curve figure renderer for compare CSV files.

Reads a curve CSV (comment line carrying the landmark abscissas, a fixed
column header, then sample rows), plots the quotient q against x with a
dashed horizontal line at 1 and a labeled vertical line at each of the
four landmarks, and writes the image. Everything in the figure comes
from the file content: the landmarks are taken from the comment line,
never recomputed, and no bound evaluation happens here.

Command line:

    render_figure <csv> <out> [--format png|svg] [--title TEMPLATE]

The title template may use the fields {n}, {b}, {beta}, {x_hat},
{y_hat}, {z_hat}, {beta_hat}; a template that does not format cleanly
is used verbatim.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

# header order of the landmark keys in the comment line; also the order
# in which the vertical markers are drawn
LANDMARK_KEYS = ("x_hat", "y_hat", "z_hat", "beta_hat")
PARAM_KEYS = ("n", "b", "beta")
EXPECTED_HEADER = "x,q,thm1_upper,short_upper,exact_tail,region"
REGIONS = frozenset({"below_y", "y_to_x", "above_x"})

_MARKER_COLORS = {
    "x_hat": "tab:red",
    "y_hat": "tab:green",
    "z_hat": "tab:purple",
    "beta_hat": "tab:orange",
}


class SchemaError(ValueError):
    """Raised when the CSV does not conform to the curve schema."""


class ImageFormat(str, Enum):
    PNG = "png"
    SVG = "svg"


@dataclass(frozen=True)
class FigureSpec:
    """One render request: where to read, where to write, how to dress it."""

    csv_path: str
    output_path: str
    image_format: ImageFormat = ImageFormat.PNG
    title_template: Optional[str] = None


@dataclass(frozen=True)
class CurveFile:
    """Parsed contents of one compare CSV."""

    params: dict
    landmarks: dict
    xs: list
    qs: list


def _parse_comment_tokens(lines: Sequence[str]) -> tuple[dict, int]:
    """Collect key=value tokens from the leading comment lines.

    Returns the token map and the index of the first non-comment line.
    """
    tokens: dict = {}
    i = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            return tokens, i
        for piece in line[1:].split():
            if "=" not in piece:
                continue
            key, _, value = piece.partition("=")
            tokens[key] = value
    return tokens, len(lines)


def parse_curve_csv(path: str) -> CurveFile:
    """Parse a compare CSV, failing hard on the first schema violation.

    Every diagnostic names the 1-based line it refers to. Fewer than two
    sample rows is an error even when the file is otherwise well formed.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise SchemaError("line 1: empty file, expected landmark comment line")

    tokens, header_at = _parse_comment_tokens(lines)
    if header_at == 0:
        raise SchemaError("line 1: expected a '#' comment line with the landmarks")

    params: dict = {}
    landmarks: dict = {}
    for key in PARAM_KEYS + LANDMARK_KEYS:
        if key not in tokens:
            raise SchemaError(f"line 1: missing landmark '{key}' in comment header")
        try:
            value = float(tokens[key])
        except ValueError:
            raise SchemaError(
                f"line 1: landmark '{key}' is not a number: {tokens[key]!r}"
            ) from None
        if not math.isfinite(value):
            raise SchemaError(f"line 1: landmark '{key}' is not finite: {tokens[key]}")
        (params if key in PARAM_KEYS else landmarks)[key] = value

    if header_at >= len(lines):
        raise SchemaError(f"line {header_at}: missing column header")
    header_line_no = header_at + 1
    if lines[header_at] != EXPECTED_HEADER:
        raise SchemaError(
            f"line {header_line_no}: expected header '{EXPECTED_HEADER}', "
            f"got '{lines[header_at]}'"
        )

    xs: list = []
    qs: list = []
    for offset, line in enumerate(lines[header_at + 1 :]):
        line_no = header_line_no + 1 + offset
        if line == "":
            continue
        cells = line.split(",")
        if len(cells) != 6:
            raise SchemaError(f"line {line_no}: expected 6 cells, got {len(cells)}")
        values = []
        for cell in cells[:5]:
            try:
                v = float(cell)
            except ValueError:
                raise SchemaError(
                    f"line {line_no}: non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise SchemaError(f"line {line_no}: non-finite cell {cell!r}")
            values.append(v)
        if cells[5] not in REGIONS:
            raise SchemaError(f"line {line_no}: unknown region {cells[5]!r}")
        xs.append(values[0])
        qs.append(values[1])

    if len(xs) < 2:
        raise SchemaError("fewer than 2 samples")
    return CurveFile(params=params, landmarks=landmarks, xs=xs, qs=qs)


def unit_crossing_cell(xs: Sequence[float], qs: Sequence[float]) -> Optional[int]:
    """Index i of the first grid cell where q - 1 changes sign.

    The cell spans [xs[i], xs[i+1]]; an exact hit q == 1 counts as a
    crossing. Returns None when the curve stays on one side of 1.
    """
    for i in range(len(qs) - 1):
        a = qs[i] - 1.0
        b = qs[i + 1] - 1.0
        if a == 0.0 or (a < 0.0) != (b < 0.0):
            return i
    return None


def _title_for(curve: CurveFile, template: Optional[str]) -> str:
    fields = dict(curve.params)
    fields.update(curve.landmarks)
    if template is None:
        template = "quotient curve (n={n:g}, b={b:g})"
    try:
        return template.format(**fields)
    except (KeyError, IndexError, ValueError):
        return template


def build_figure(curve: CurveFile, title: Optional[str] = None):
    """Assemble the figure: curve, unit line, four landmark markers.

    The vertical markers are added in header order (x_hat, y_hat, z_hat,
    beta_hat) at exactly the abscissas read from the comment line.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(curve.xs, curve.qs, color="tab:blue", linewidth=1.5, label="q")
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=1.0)
    for key in LANDMARK_KEYS:
        value = curve.landmarks[key]
        ax.axvline(
            value,
            color=_MARKER_COLORS[key],
            linestyle=":",
            linewidth=1.2,
            label=f"{key} = {value:.6g}",
        )
    ax.set_xlabel("x")
    ax.set_ylabel("q")
    ax.set_title(_title_for(curve, title))
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig, ax


def render(spec: FigureSpec) -> CurveFile:
    """Parse the CSV and write the figure; no file is written on error."""
    curve = parse_curve_csv(spec.csv_path)
    fig, _ = build_figure(curve, spec.title_template)
    try:
        fig.savefig(spec.output_path, format=spec.image_format.value, dpi=150)
    finally:
        plt.close(fig)
    return curve


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figure",
        description="Render the quotient-curve figure from a compare CSV.",
    )
    parser.add_argument("csv", help="input curve CSV")
    parser.add_argument("out", help="output image path")
    parser.add_argument(
        "--format",
        choices=[f.value for f in ImageFormat],
        default=ImageFormat.PNG.value,
        help="image format (default: png)",
    )
    parser.add_argument("--title", default=None, help="title template")
    args = parser.parse_args(argv)

    spec = FigureSpec(
        csv_path=args.csv,
        output_path=args.out,
        image_format=ImageFormat(args.format),
        title_template=args.title,
    )
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
