"""Reading and writing log-density and optimism CSV files."""

from __future__ import annotations

import csv
import math
from typing import Sequence

import numpy as np

from .core import LogDensityMatrix


class MalformedInput(ValueError):
    """The input file does not follow the documented CSV layout."""


def _number(cell: str, row: int, col: int) -> float:
    try:
        value = float(cell.strip())
    except ValueError:
        raise MalformedInput(f"row {row}, column {col}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise MalformedInput(f"row {row}, column {col}: non-finite value {cell!r}")
    return value


def read_log_density_csv(path) -> LogDensityMatrix:
    """Header of model labels, then one row of natural-log densities per observation.

    Row and column numbers in errors are 1-based and count the header as row 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedInput("row 1: missing header")
    labels = [c.strip() for c in rows[0]]
    if not labels or any(not c for c in labels):
        raise MalformedInput("row 1: empty model label in header")
    if len(set(labels)) != len(labels):
        raise MalformedInput("row 1: duplicate model labels")
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(labels):
            raise MalformedInput(f"row {i}: expected {len(labels)} columns, found {len(row)}")
        values.append([_number(cell, i, j) for j, cell in enumerate(row, start=1)])
    arr = np.array(values, dtype=float).reshape(len(values), len(labels))
    return LogDensityMatrix(arr, tuple(labels))


def write_log_density_csv(matrix: LogDensityMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(matrix.model_labels)
        for row in matrix.values:
            writer.writerow([format(float(x), ".17g") for x in row])


def read_optimism_csv(path, labels: Sequence[str]) -> np.ndarray:
    """Two columns ``model,optimism``; returns the vector in ``labels`` order.

    A label set that differs from ``labels`` raises ``KeyError``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or [c.strip() for c in rows[0]] != ["model", "optimism"]:
        raise MalformedInput("row 1: optimism header must be 'model,optimism'")
    found = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise MalformedInput(f"row {i}: expected 2 columns, found {len(row)}")
        label = row[0].strip()
        if label in found:
            raise MalformedInput(f"row {i}, column 1: duplicate model {label!r}")
        found[label] = _number(row[1], i, 2)
    if set(found) != set(labels):
        missing = sorted(set(labels) - set(found))
        extra = sorted(set(found) - set(labels))
        raise KeyError(f"optimism labels do not match matrix header (missing {missing}, unexpected {extra})")
    return np.array([found[label] for label in labels])


def parse_inline_vector(text: str) -> np.ndarray:
    cells = [c for c in text.split(",")]
    return np.array([_number(c, 1, j) for j, c in enumerate(cells, start=1)])
