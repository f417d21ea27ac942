"""CSV/JSON interchange for value grids and reports."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

GRID_COLUMNS = ["k", "V", "slope_plus", "slope_minus", "policy_c", "residual"]


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def write_grid_csv(V, path, residual=None) -> None:
    residual = np.full(V.n, np.nan) if residual is None else np.asarray(residual)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for row in zip(V.nodes, V.values, V.slope_plus, V.slope_minus, V.policy, residual):
            w.writerow([fmt(x) for x in row])


def read_grid_csv(path):
    """(k, V) columns of a grid file; other columns are ignored. Raises ValueError when malformed."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "k" not in header or "V" not in header:
        raise ValueError(f"{path}: header must contain 'k' and 'V' columns, got {header}")
    ik, iv = header.index("k"), header.index("V")
    k, v = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            k.append(float(row[ik]))
            v.append(float(row[iv]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    k, v = np.asarray(k), np.asarray(v)
    if k.size < 3:
        raise ValueError(f"{path}: need at least 3 grid rows")
    if not np.all(np.isfinite(k)) or not np.all(np.isfinite(v)):
        raise ValueError(f"{path}: non-finite entries")
    if np.any(np.diff(k) <= 0):
        raise ValueError(f"{path}: k column must be strictly increasing")
    return k, v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
