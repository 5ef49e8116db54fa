"""CSV and flat key-value file formats used by the command line."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .geometry import PointCloud

__all__ = ["ingest_csv", "write_csv", "write_points", "read_key_values", "write_key_values"]


def _parse_row(fields, lineno):
    try:
        values = [float(f) for f in fields]
    except ValueError:
        return None
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite value", line=lineno)
    return values


def ingest_csv(path) -> PointCloud:
    """Read one point per row of comma-separated decimals.

    A first row that does not parse as numbers is taken as a header and
    skipped. Blank lines are ignored.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        values = _parse_row(fields, lineno)
        if values is None:
            if not rows and width is None:
                width = len(fields)
                continue
            raise ParseError(f"non-numeric field in {line!r}", line=lineno)
        if width is None:
            width = len(values)
        if len(values) != width:
            raise ParseError(f"expected {width} fields, found {len(values)}", line=lineno)
        rows.append(values)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    return PointCloud(np.array(rows))


def write_csv(path, columns, array, index=False) -> None:
    """Write ``array`` with a one-line header; floats use 17 significant digits."""
    array = np.asarray(array)
    if array.ndim == 1:
        array = array[:, None]
    with open(path, "w") as fh:
        head = (["index"] if index else []) + list(columns)
        fh.write(",".join(head) + "\n")
        for i, row in enumerate(array):
            if np.issubdtype(array.dtype, np.integer):
                cells = [str(int(v)) for v in row]
            else:
                cells = [repr(float(v)) for v in row]
            if index:
                cells.insert(0, str(i))
            fh.write(",".join(cells) + "\n")


def write_points(path, cloud) -> None:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
    write_csv(path, [f"x{c}" for c in range(pts.shape[1])], pts)


def read_key_values(path) -> dict:
    """``key = value`` per line; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        out[key] = value
    return out


def write_key_values(path, items: dict) -> None:
    with open(path, "w") as fh:
        for key, value in items.items():
            if isinstance(value, float):
                value = repr(value)
            fh.write(f"{key} = {value}\n")
