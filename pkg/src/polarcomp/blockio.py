"""File formats: binary matrix blocks, JSON manifests, CSV series.

Block format: a 16-byte header of two little-endian uint64 (rows, cols)
followed by rows*cols float64 values, little endian, row major. CSV files
emitted by the CLI start with '# key=value' comment lines carrying the seed
and a config hash, and use repr-precision floats so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .construction import CodeConstruction, construction_from_dict, construction_to_dict
from .errors import ValidationError

__all__ = [
    "save_block",
    "load_block",
    "save_grid_manifest",
    "load_grid_manifest",
    "save_plan_manifest",
    "config_hash",
    "write_csv",
    "read_csv",
]

_HEADER = struct.Struct("<QQ")


def save_block(path, matrix) -> None:
    m = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValidationError(f"blocks are 2D, got ndim={m.ndim}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(m.shape[0], m.shape[1]))
        fh.write(m.astype("<f8", copy=False).tobytes())


def load_block(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValidationError(f"{path}: truncated block header")
        rows, cols = _HEADER.unpack(header)
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise ValidationError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)


def save_grid_manifest(path, row_c: CodeConstruction, col_c: CodeConstruction, cell_keys: dict) -> None:
    """Task-grid manifest: constructions plus a cell -> object-key map."""
    doc = {
        "n1": row_c.n_workers,
        "n2": col_c.n_workers,
        "row_construction": construction_to_dict(row_c),
        "col_construction": construction_to_dict(col_c),
        "cells": {f"{i},{j}": key for (i, j), key in sorted(cell_keys.items())},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_grid_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    row_c = construction_from_dict(doc["row_construction"])
    col_c = construction_from_dict(doc["col_construction"])
    cells = {}
    for key, obj in doc["cells"].items():
        i, j = key.split(",")
        cells[(int(i), int(j))] = obj
    return row_c, col_c, cells


def save_plan_manifest(path, plan) -> None:
    doc = {
        "p": plan.p,
        "sub_constructions": [construction_to_dict(c) for c in plan.sub_constructions],
        "row_ranges": [list(r) for r in plan.row_ranges],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_plan_manifest(path):
    from .partial import PartialPlan

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return PartialPlan(
        sub_constructions=tuple(construction_from_dict(d) for d in doc["sub_constructions"]),
        row_ranges=tuple((int(a), int(b)) for a, b in doc["row_ranges"]),
    )


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(path, header_comments: dict, columns: list, rows) -> None:
    """CSV with '# key=value' provenance comments; floats at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(header_comments):
            fh.write(f"# {key}={header_comments[key]}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """(comments dict, column names, rows of strings) for round-tripping."""
    comments = {}
    columns = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                comments[key] = value
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    if columns is None:
        raise ValidationError(f"{path}: no header row")
    return comments, columns, rows
