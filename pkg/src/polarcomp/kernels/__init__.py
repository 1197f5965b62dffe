"""Decodability-check kernels with a compiled fast path.

The compiled extension is built from ``_compiled.pyx`` when Cython and a C
compiler are available; otherwise (or when ``POLARCOMP_KERNELS=python`` is
set) the pure-Python reference in ``_reference`` is used. Both expose the
same functions with the same semantics; ``polarcomp cli bench-kernels``
compares their speed.

Public functions normalize inputs to contiguous uint8 / int64 arrays, so
callers may pass any array-like of flags or indices.
"""

from __future__ import annotations

import os

import numpy as np

from . import _reference

try:
    from . import _compiled
except ImportError:  # extension not built; pure fallback covers everything
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None

_forced = os.environ.get("POLARCOMP_KERNELS", "").strip().lower()
if _forced == "python" or _compiled is None:
    _impl = _reference
elif _forced in ("", "compiled"):
    _impl = _compiled
else:
    raise RuntimeError(f"POLARCOMP_KERNELS must be 'python' or 'compiled', got {_forced!r}")

ACTIVE_BACKEND = _impl.BACKEND


def backend(name: str):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        return _reference
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel backend is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def _flags(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x), dtype=np.uint8)


def _indices(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x), dtype=np.int64)


def check_decodable_1d(avail, frozen) -> bool:
    return bool(_impl.check_decodable_1d(_flags(avail), _flags(frozen)))


def first_decodable_prefix_1d(order, frozen, n_usable: int) -> int:
    return int(_impl.first_decodable_prefix_1d(_indices(order), _flags(frozen), int(n_usable)))


def check_decodable_2d(known, n1: int, n2: int, frozen_rows, frozen_cols) -> bool:
    flat = _flags(known).reshape(-1)
    return bool(_impl.check_decodable_2d(flat, int(n1), int(n2), _flags(frozen_rows), _flags(frozen_cols)))


def first_decodable_prefix_2d(order, n1: int, n2: int, frozen_rows, frozen_cols, n_usable: int) -> int:
    return int(
        _impl.first_decodable_prefix_2d(
            _indices(order), int(n1), int(n2), _flags(frozen_rows), _flags(frozen_cols), int(n_usable)
        )
    )
