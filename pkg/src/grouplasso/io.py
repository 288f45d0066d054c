"""Numeric CSV ingestion and weighted standardization."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, RaggedRows


def _parse_cell(cell: str, row: int, col: int) -> float:
    text = cell.strip()
    if text == "" or text.upper() in ("NA", "NAN", "NULL"):
        raise ParseError(f"missing value at row {row}, column {col}", row, col)
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"cannot parse {text!r} as a number at row {row}, column {col}", row, col
        ) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value at row {row}, column {col}", row, col)
    return value


def load_csv(path) -> tuple[np.ndarray, list[str] | None]:
    """Load a rectangular numeric CSV, auto-detecting an optional header row.

    The first row is treated as a header when any of its cells fails to
    parse as a number.  Missing or non-numeric body cells raise
    :class:`ParseError` with their 1-based location; rows of inconsistent
    width raise :class:`RaggedRows`.
    """
    with open(path, newline="") as handle:
        raw = [row for row in csv.reader(handle) if row]
    if not raw:
        raise ParseError(f"{path} is empty")

    header: list[str] | None = None
    first = raw[0]
    try:
        for j, cell in enumerate(first):
            _parse_cell(cell, 1, j + 1)
    except ParseError:
        header = [c.strip() for c in first]
        raw = raw[1:]
        if not raw:
            raise ParseError(f"{path} has a header but no data rows") from None

    width = len(raw[0]) if header is None else len(header)
    offset = 1 if header is None else 2
    data = np.empty((len(raw), width))
    for i, row in enumerate(raw):
        if len(row) != width:
            raise RaggedRows(
                f"row {i + offset} has {len(row)} cells, expected {width}",
                row=i + offset,
            )
        for j, cell in enumerate(row):
            data[i, j] = _parse_cell(cell, i + offset, j + 1)
    return data, header


def write_csv(path, header: list[str], rows) -> None:
    """Write rows of floats with full double-precision round-trip."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])


def format_float(v) -> str:
    """17 significant digits: exact round trip for doubles."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


@dataclass
class StandardizeRecord:
    """Centers and scales recorded so coefficients map back to the input scale."""

    x_center: np.ndarray
    x_scale: np.ndarray
    y_center: float
    y_scale: float
    constant_columns: np.ndarray

    def destandardize(self, beta: np.ndarray, intercept: float) -> tuple[np.ndarray, float]:
        """Map standardized-fit coefficients back to the original scale."""
        beta_orig = beta * (self.y_scale / self.x_scale)
        b0 = self.y_center + self.y_scale * intercept - float(self.x_center @ beta_orig)
        return beta_orig, b0


def standardize(
    x: np.ndarray, y: np.ndarray | None, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray | None, StandardizeRecord]:
    """Weighted centering and unit-variance scaling of columns of x (and y).

    Constant columns are flagged and kept with scale one.  Weights are
    normalized to sum to one before the moments are taken.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / np.sum(w)
    center = w @ x
    var = w @ (x - center) ** 2
    constant = var <= 1e-14 * np.maximum(1.0, center**2)
    scale = np.where(constant, 1.0, np.sqrt(np.where(constant, 1.0, var)))
    xs = (x - center) / scale

    if y is None:
        return xs, None, StandardizeRecord(center, scale, 0.0, 1.0, np.flatnonzero(constant))

    y = np.asarray(y, dtype=float)
    y_center = float(w @ y)
    y_var = float(w @ (y - y_center) ** 2)
    y_scale = 1.0 if y_var <= 1e-14 * max(1.0, y_center**2) else float(np.sqrt(y_var))
    ys = (y - y_center) / y_scale
    return xs, ys, StandardizeRecord(center, scale, y_center, y_scale, np.flatnonzero(constant))
