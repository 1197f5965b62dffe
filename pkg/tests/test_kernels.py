"""Backend equivalence: the compiled kernels must match the pure reference."""

import numpy as np
import pytest

from polarcomp import kernels
from polarcomp.construction import build_construction

needs_compiled = pytest.mark.skipif(
    not kernels.COMPILED_AVAILABLE, reason="compiled kernel extension not built"
)


def test_active_backend_reported():
    assert kernels.ACTIVE_BACKEND in ("python", "compiled")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.backend("fortran")


@needs_compiled
@pytest.mark.parametrize("n,eps", [(4, 0.5), (8, 0.375), (16, 0.25), (64, 0.375), (512, 0.375)])
def test_check_1d_backends_agree(n, eps):
    pure = kernels.backend("python")
    fast = kernels.backend("compiled")
    c = build_construction(n, eps)
    frozen = np.ascontiguousarray(c.frozen_mask)
    rng = np.random.default_rng(n)
    for _ in range(300):
        avail = np.ascontiguousarray((rng.random(n) > eps).astype(np.uint8))
        assert bool(pure.check_decodable_1d(avail, frozen)) == bool(
            fast.check_decodable_1d(avail, frozen)
        )


@needs_compiled
@pytest.mark.parametrize("n", [8, 64, 512])
def test_prefix_1d_backends_agree(n):
    pure = kernels.backend("python")
    fast = kernels.backend("compiled")
    c = build_construction(n, 0.375)
    frozen = np.ascontiguousarray(c.frozen_mask)
    rng = np.random.default_rng(n)
    for _ in range(40):
        order = np.ascontiguousarray(rng.permutation(n).astype(np.int64))
        n_usable = int(rng.integers(0, n + 1))
        assert pure.first_decodable_prefix_1d(order, frozen, n_usable) == int(
            fast.first_decodable_prefix_1d(order, frozen, n_usable)
        )


@needs_compiled
def test_2d_backends_agree():
    pure = kernels.backend("python")
    fast = kernels.backend("compiled")
    row_c = build_construction(8, 0.25)
    col_c = build_construction(4, 0.25)
    fr = np.ascontiguousarray(row_c.frozen_mask)
    fc = np.ascontiguousarray(col_c.frozen_mask)
    rng = np.random.default_rng(9)
    for _ in range(300):
        known = np.ascontiguousarray((rng.random(32) > 0.35).astype(np.uint8))
        assert bool(pure.check_decodable_2d(known, 8, 4, fr, fc)) == bool(
            fast.check_decodable_2d(known, 8, 4, fr, fc)
        )
    for _ in range(40):
        order = np.ascontiguousarray(rng.permutation(32).astype(np.int64))
        assert pure.first_decodable_prefix_2d(order, 8, 4, fr, fc, 32) == int(
            fast.first_decodable_prefix_2d(order, 8, 4, fr, fc, 32)
        )


def test_prefix_search_matches_linear_scan():
    # binary search must find exactly the first accepting prefix
    c = build_construction(16, 0.375)
    frozen = c.frozen_mask
    rng = np.random.default_rng(11)
    for _ in range(100):
        order = rng.permutation(16)
        k = kernels.first_decodable_prefix_1d(order, frozen, 16)
        linear = -1
        for j in range(1, 17):
            avail = np.zeros(16, dtype=np.uint8)
            avail[order[:j]] = 1
            if kernels.check_decodable_1d(avail, frozen):
                linear = j
                break
        assert k == linear
