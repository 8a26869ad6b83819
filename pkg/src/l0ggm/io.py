"""CSV matrices and JSON sidecars."""

import csv
import json
import math

import numpy as np


def read_matrix_csv(path):
    """Comma-separated numeric matrix; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        A = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as err:
        raise ValueError(f"{path}: malformed CSV ({err})") from None
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"{path}: ragged or empty rows")
    return A


def write_matrix_csv(path, A):
    """17 significant digits so values round-trip exactly."""
    np.savetxt(path, np.asarray(A, dtype=np.float64), delimiter=",",
               fmt="%.17g")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj):
    """Non-finite floats are written as ``null``."""
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_instance_metadata(path, inst):
    write_json(path, inst.metadata())
