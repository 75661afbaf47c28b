"""CSV interchange for paired samples.

Schema: header ``x_0,...,x_{dx-1},y_0,...,y_{dy-1}``, one observation pair
per row, numbers written with full round-trip precision (shortest decimal
that parses back to the same float).  Lines starting with ``#`` are
comments; writers may prepend manifest comments and readers skip them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np

from .discrepancy import PairedSample
from .errors import InputError

__all__ = ["read_sample_csv", "write_sample_csv", "sample_header"]


def sample_header(dx: int, dy: int) -> list[str]:
    return [f"x_{i}" for i in range(dx)] + [f"y_{i}" for i in range(dy)]


def write_sample_csv(sample: PairedSample, path, comments: Iterable[str] = ()) -> None:
    """Write a sample; ``comments`` become leading ``#`` lines."""
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(sample_header(sample.dx, sample.dy)) + "\n")
        for xrow, yrow in zip(sample.xs, sample.ys):
            cells = [repr(float(v)) for v in xrow] + [repr(float(v)) for v in yrow]
            fh.write(",".join(cells) + "\n")


def _parse_header(fields: list[str], path) -> tuple[int, int]:
    dx = 0
    while dx < len(fields) and fields[dx] == f"x_{dx}":
        dx += 1
    dy = 0
    while dx + dy < len(fields) and fields[dx + dy] == f"y_{dy}":
        dy += 1
    if dx == 0 or dy == 0 or dx + dy != len(fields):
        raise InputError(
            f"{path}: malformed header {fields!r}; expected x_0..x_{{dx-1}},y_0..y_{{dy-1}}"
        )
    return dx, dy


def read_sample_csv(path) -> PairedSample:
    """Read a sample written by :func:`write_sample_csv` (comments ignored)."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InputError(f"{path}: no data")
    dx, dy = _parse_header([f.strip() for f in lines[0].split(",")], path)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != dx + dy:
            raise InputError(f"{path}:{lineno}: expected {dx + dy} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: header but no observation rows")
    data = np.asarray(rows, dtype=np.float64)
    return PairedSample(xs=data[:, :dx], ys=data[:, dx:])
