"""Plot-ready CSV tables with JSON sidecars, and deterministic JSON reports.

CSV files have one header row, comma separators, LF line endings and every
number written with 17 significant digits, so values round-trip exactly.
JSON is UTF-8 with sorted keys; non-finite floats become ``null``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    """Recursively convert numpy values to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def config_hash(config):
    """SHA-256 of the canonical (sorted, compact) JSON form of ``config``."""
    text = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(x):
    return "%.17g" % x


def write_csv(path, columns, data, sidecar=None):
    """Write ``data`` (rows x columns) under a header; optional JSON sidecar next to it."""
    path = Path(path)
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} columns but data has {data.shape[1]}")
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in data)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if sidecar is not None:
        write_json(path.with_suffix(".json"), {"file": path.name, "columns": list(columns), **sidecar})
    return path


def read_csv(path):
    """Return ``(columns, data)``; the inverse of :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def lattice_table(lattice, fields):
    """Flatten per-site fields into CSV columns.

    ``fields`` maps a name to an array whose leading axes are the lattice; any
    trailing axes are flattened into ``name_i_j`` columns.  Site indices and
    coordinates come first.
    """
    d = lattice.ndim
    idx = np.stack(np.meshgrid(*[np.arange(n) for n in lattice.dims], indexing="ij"), axis=-1).reshape(-1, d)
    cols = [f"i{k}" for k in range(d)] + [f"x{k}" for k in range(d)]
    parts = [idx.astype(float), lattice.coordinates().reshape(-1, d)]
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        tail = arr.shape[d:]
        parts.append(arr.reshape(lattice.size, -1))
        if not tail:
            cols.append(name)
        else:
            cols.extend(name + "_" + "_".join(map(str, t)) for t in np.ndindex(*tail))
    return cols, np.concatenate(parts, axis=1)
