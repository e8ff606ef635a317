"""CSV readers and writers shared by the CLI and the procedures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidDataError


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a mandatory header row.

    Returns the column names and an ``(rows, cols)`` float array.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InvalidDataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InvalidDataError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        float(header[0])
        numeric_header = all(_is_number(h) for h in header)
    except ValueError:
        numeric_header = False
    if numeric_header:
        raise InvalidDataError(f"{path}: header row is missing")
    width = len(header)
    data = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise InvalidDataError(f"{path}:{k}: expected {width} fields, got {len(r)}")
        try:
            data.append([float(c) for c in r])
        except ValueError as exc:
            raise InvalidDataError(f"{path}:{k}: {exc}") from exc
    A = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise InvalidDataError(f"{path}: nonfinite values")
    return header, A


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def fmt(v) -> str:
    """Stable text form: ``repr`` for floats so reruns are byte-identical."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
