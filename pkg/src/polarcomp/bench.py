"""Timing harnesses behind the bench-codes and bench-kernels CLI commands."""

from __future__ import annotations

import math
import time

import numpy as np

from . import kernels
from .baselines import make_mds_code, mds_decode, mds_encode
from .blocks import PartitionedMatrix
from .coding import decode, encode
from .construction import build_construction
from .errors import ConditioningError, ValidationError

__all__ = ["bench_codes", "bench_kernels", "fit_loglog_slope"]

RS_ERROR_FLAG_THRESHOLD = 1e-6


def _time_call(fn, min_time: float = 0.05):
    """Average seconds per call after a warmup, repeating until min_time elapses."""
    t0 = time.perf_counter()
    fn()  # warmup: page faults, allocator, caches
    once = time.perf_counter() - t0
    reps = max(1, math.ceil(min_time / max(once, 1e-9)))
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def _rel_error(approx, exact) -> float:
    denom = np.linalg.norm(exact)
    return float(np.linalg.norm(approx - exact) / denom) if denom else float(np.linalg.norm(approx))


def bench_codes(
    n_list,
    rate: float = 0.5,
    acols: int = 128,
    xcols: int = 8,
    points: str = "chebyshev",
    seed: int = 0,
    min_time: float = 0.05,
):
    """Encode/decode wall times and decode errors, coded codec vs naive RS.

    A is (100*N x acols) per the usual scaling, so the per-block work stays
    constant and decode time tracks the block-operation count. The RS error
    flag marks runs whose decode error exceeds 1e-6 (full-precision naive RS
    becomes unstable as N grows).
    """
    if not (0.0 < rate < 1.0):
        raise ValidationError(f"rate must be in (0,1), got {rate}")
    rng = np.random.default_rng(seed)
    columns = ["n", "codec", "encode_s", "decode_s", "rel_error", "error_flag"]
    rows = []
    for n in n_list:
        d = int(round(n * rate))
        construction = build_construction(n, 1.0 - rate, d)
        a = rng.standard_normal((100 * n, acols))
        x = rng.standard_normal((acols, xcols))
        direct = a @ x
        part = PartitionedMatrix.partition(a, d)

        enc_s = _time_call(lambda: encode(construction, part), min_time)
        coded = encode(construction, part)
        outputs = [(w, coded[w] @ x) for w in range(n)]
        dec_s = _time_call(lambda: decode(construction, outputs), min_time)
        recovered = decode(construction, outputs).stack(strip_padding=False)[: a.shape[0]]
        err = _rel_error(recovered, direct)
        rows.append((n, "polar", enc_s, dec_s, err, int(err > RS_ERROR_FLAG_THRESHOLD)))

        code = make_mds_code(n, d, points)
        rs_enc_s = _time_call(lambda: mds_encode(part, code), min_time)
        rs_coded = mds_encode(part, code)
        # decode from a seeded random k-subset, as if the other workers straggled
        subset = sorted(rng.permutation(n)[:d])
        rs_outputs = [(w, rs_coded[w] @ x) for w in subset]
        try:
            rs_dec_s = _time_call(lambda: mds_decode(rs_outputs, code), min_time)
            rs_rec = mds_decode(rs_outputs, code).stack(strip_padding=False)[: a.shape[0]]
            rs_err = _rel_error(rs_rec, direct)
        except ConditioningError:
            rs_dec_s, rs_err = math.nan, math.inf
        rows.append((n, "rs_naive", rs_enc_s, rs_dec_s, rs_err,
                     int(not rs_err <= RS_ERROR_FLAG_THRESHOLD)))
    return columns, rows


def fit_loglog_slope(ns, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    ns = np.asarray(ns, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    return float(np.polyfit(np.log(ns), np.log(times), 1)[0])


def bench_kernels(sizes=(64, 256, 512), trials: int = 200, seed: int = 0, min_time: float = 0.05):
    """Compare the compiled and pure-Python decodability kernels."""
    backends = ["python"] + (["compiled"] if kernels.COMPILED_AVAILABLE else [])
    rng = np.random.default_rng(seed)
    columns = ["op", "backend", "n", "seconds_per_call", "calls_per_second"]
    rows = []
    for n in sizes:
        c = build_construction(n, 0.375)
        patterns = rng.random((trials, n)) > 0.375
        orders = np.stack([rng.permutation(n) for _ in range(trials)]).astype(np.int64)
        for name in backends:
            impl = kernels.backend(name)
            frozen = np.ascontiguousarray(c.frozen_mask)

            def run_checks():
                for i in range(trials):
                    impl.check_decodable_1d(
                        np.ascontiguousarray(patterns[i], dtype=np.uint8), frozen
                    )

            per = _time_call(run_checks, min_time) / trials
            rows.append(("check_1d", name, n, per, 1.0 / per))

            def run_prefix():
                for i in range(trials):
                    impl.first_decodable_prefix_1d(orders[i], frozen, n)

            per = _time_call(run_prefix, min_time) / trials
            rows.append(("first_prefix_1d", name, n, per, 1.0 / per))
    # 2D sweep at a fixed 16x16 grid
    row_c = build_construction(16, 0.25)
    col_c = build_construction(16, 0.25)
    known = (rng.random((trials, 256)) > 0.25).astype(np.uint8)
    for name in backends:
        impl = kernels.backend(name)

        def run_2d():
            for i in range(trials):
                impl.check_decodable_2d(
                    np.ascontiguousarray(known[i]), 16, 16,
                    np.ascontiguousarray(row_c.frozen_mask),
                    np.ascontiguousarray(col_c.frozen_mask),
                )

        per = _time_call(run_2d, min_time) / trials
        rows.append(("check_2d_16x16", name, 256, per, 1.0 / per))
    return columns, rows
