"""Deterministic file emission: 17-significant-digit CSV/JSON and 8-bit PGM.

Every float is written with %.17g so that emitted values round-trip to
the exact double.  JSON is produced by a small recursive writer because
json.dumps offers no control over float formatting.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def dumps_json(obj):
    return _dumps(obj, 0) + "\n"


def _dumps(obj, level):
    pad = "  " * level
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(pad + "  " + _dumps(v, level + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + _dumps(v, level + 1)
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_matrix_csv(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [",".join(format_float(v) for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    return np.array(rows, dtype=np.float64)


def write_pgm(path, matrix):
    """8-bit binary PGM, min-max normalized; bounds go to a .json sidecar."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lo = float(matrix.min())
    hi = float(matrix.max())
    if hi > lo:
        scaled = np.round((matrix - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(matrix)
    data = scaled.astype(np.uint8)
    rows, cols = data.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())
    write_json(str(path) + ".json", {"min": lo, "max": hi})


def write_matrix_files(out_dir, name, matrix):
    """Write <name>.csv, <name>.pgm and <name>.pgm.json; returns the paths."""
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{name}.csv"
    pgm_path = out_dir / f"{name}.pgm"
    write_matrix_csv(csv_path, matrix)
    write_pgm(pgm_path, matrix)
    return [str(csv_path), str(pgm_path), str(pgm_path) + ".json"]


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)


def format_table(headers, rows):
    """Aligned-column plain text: left-aligned names, one row per entry."""
    cells = [[str(h) for h in headers]]
    for row in rows:
        cells.append([c if isinstance(c, str) else format_float(c) for c in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in cells
    ]
    return "\n".join(lines) + "\n"
