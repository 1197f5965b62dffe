"""Partial construction: split one task into p independent sub-codes.

Each sub-code encodes and decodes its own contiguous slice of A's rows, so
encode/decode cost drops from O(N log N) to O(N log(N/p)) at the price of
weaker straggler resilience (every sub-code must become decodable). The
sub-codes may have different sizes, which is also the workaround for worker
counts that are not a power of two (e.g. 20 workers as 16 + 4).

Worker-side (in-memory) encoding derives each worker's generator row from
the circuit so the worker can build its own coded block from at most N raw
blocks fetched through a key-value interface, removing the master-side
encode pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .blocks import OpCounter, PartitionedMatrix
from .coding import decode, encode, generator_matrix
from .construction import build_construction
from .errors import FetchError, UndecodablePatternError, ValidationError
from .runtime import RuntimeModel, default_model

__all__ = [
    "PartialPlan",
    "plan_partial",
    "encode_decode_partial",
    "in_memory_encode_task",
    "simulate_partial_decodability_time",
]


@dataclass(frozen=True)
class PartialPlan:
    """p sub-constructions plus the row interval of A each one covers."""

    sub_constructions: tuple
    row_ranges: tuple  # ((start, stop), ...) partitioning [0, m)

    def __post_init__(self):
        if len(self.sub_constructions) != len(self.row_ranges):
            raise ValidationError("one row range per sub-construction required")
        pos = 0
        for start, stop in self.row_ranges:
            if start != pos or stop <= start:
                raise ValidationError("row ranges must be contiguous and nonempty")
            pos = stop

    @property
    def p(self) -> int:
        return len(self.sub_constructions)

    @property
    def rows(self) -> int:
        return self.row_ranges[-1][1]

    @property
    def total_workers(self) -> int:
        return sum(c.n_workers for c in self.sub_constructions)

    def worker_group(self, worker_id: int):
        """(sub-code index, local worker index) of a global worker id."""
        if worker_id < 0:
            raise ValidationError(f"worker id {worker_id} out of range")
        offset = 0
        for s, c in enumerate(self.sub_constructions):
            if worker_id < offset + c.n_workers:
                return s, worker_id - offset
            offset += c.n_workers
        raise ValidationError(f"worker id {worker_id} out of range")

    def data_block_offset(self, sub: int) -> int:
        return sum(c.n_data for c in self.sub_constructions[:sub])


def plan_partial(m: int, p: int, n_per, epsilon: float) -> PartialPlan:
    """Plan p sub-codes over an m-row matrix.

    ``n_per`` is one worker count (identical sub-codes) or a sequence of p
    worker counts (heterogeneous sizes, e.g. [16, 4] to use 20 workers).
    Row shares are contiguous and proportional to each sub-code's data
    capacity, so 16 (12 data) + 4 (3 data) splits rows 4/5 and 1/5.
    """
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    if m < p:
        raise ValidationError(f"cannot split {m} rows into {p} sub-codes")
    sizes = [int(n_per)] * p if np.isscalar(n_per) else [int(v) for v in n_per]
    if len(sizes) != p:
        raise ValidationError(f"expected {p} worker counts, got {len(sizes)}")
    subs = [build_construction(n, epsilon) for n in sizes]
    weights = np.cumsum([c.n_data for c in subs])
    bounds = np.rint(m * weights / weights[-1]).astype(int)
    ranges = []
    start = 0
    for stop in bounds:
        ranges.append((int(start), int(stop)))
        start = int(stop)
    return PartialPlan(sub_constructions=tuple(subs), row_ranges=tuple(ranges))


def encode_decode_partial(
    a,
    x,
    plan: PartialPlan,
    available=None,
    counters=None,
):
    """Encode, multiply, and decode every sub-code; stack the results.

    ``available`` optionally lists, per sub-code, the worker indices whose
    outputs arrive (None = all of them). Decodability of every sub-code is
    checked up front; an undecodable one fails the whole call naming the
    sub-code, even if the others would succeed. ``counters`` (a list of
    OpCounter, one per sub-code) receives the per-sub-code decode work.
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.shape[0] != plan.rows:
        raise ValidationError(f"A has {a.shape[0]} rows, plan covers {plan.rows}")
    if available is None:
        available = [None] * plan.p
    if len(available) != plan.p:
        raise ValidationError("need one availability list per sub-code")
    patterns = []
    for s, c in enumerate(plan.sub_constructions):
        flags = np.zeros(c.n_workers, dtype=np.uint8)
        if available[s] is None:
            flags[:] = 1
        else:
            flags[list(available[s])] = 1
        if not kernels.check_decodable_1d(flags, c.frozen_mask):
            raise UndecodablePatternError(f"sub-code {s} has an undecodable pattern")
        patterns.append(flags)
    pieces = []
    for s, c in enumerate(plan.sub_constructions):
        start, stop = plan.row_ranges[s]
        part = PartitionedMatrix.partition(a[start:stop], c.n_data)
        coded = encode(c, part)
        outputs = [(w, coded[w] @ x) for w in np.flatnonzero(patterns[s])]
        counter = counters[s] if counters is not None else None
        decoded = decode(c, outputs, counter=counter)
        pieces.append(decoded.stack(strip_padding=False)[: stop - start])
    return np.concatenate(pieces, axis=0)


def in_memory_encode_task(worker_id: int, plan: PartialPlan, fetch, block_shape=None):
    """Compute one worker's coded block from raw data blocks it fetches itself.

    ``fetch`` maps a global data-block index to that raw block (a Mapping or
    a callable); a missing block raises FetchError. Generator rows with no
    data dependency (frozen-only rows) produce a zero block, which needs
    ``block_shape`` unless a dependency was fetched.
    """
    sub, local = plan.worker_group(worker_id)
    c = plan.sub_constructions[sub]
    row = generator_matrix(c)[local]
    offset = plan.data_block_offset(sub)
    getter = fetch.__getitem__ if hasattr(fetch, "__getitem__") else fetch
    acc = None
    for pos, channel in enumerate(c.data_set):
        if not row[channel]:
            continue
        key = offset + pos
        try:
            block = np.asarray(getter(key), dtype=np.float64)
        except KeyError as exc:
            raise FetchError(f"raw block {key} unavailable to worker {worker_id}") from exc
        acc = block.copy() if acc is None else acc + block
    if acc is None:
        if block_shape is None:
            raise ValidationError(
                f"worker {worker_id} depends on no data block; pass block_shape"
            )
        acc = np.zeros(block_shape, dtype=np.float64)
    return acc


def simulate_partial_decodability_time(
    plan: PartialPlan,
    model: RuntimeModel | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """Time until every sub-code is decodable, per trial.

    Shared-seed proxy for the resilience trade-off: with total workers and
    rate fixed, the mean is nondecreasing in p. Workers are assigned to
    sub-codes in contiguous index order, so plans over the same total worker
    count reuse identical samples.
    """
    model = model or default_model()
    rng_times = [np.random.default_rng([int(seed), t, 0]) for t in range(int(trials))]
    out = np.empty(int(trials), dtype=np.float64)
    for t, rng in enumerate(rng_times):
        times = model.sample_finish_times(rng, plan.total_workers)
        worst = 0.0
        offset = 0
        for c in plan.sub_constructions:
            sub_times = times[offset : offset + c.n_workers]
            order = np.argsort(sub_times, kind="stable")
            n_fin = int(np.sum(np.isfinite(sub_times)))
            k = kernels.first_decodable_prefix_1d(order, c.frozen_mask, n_fin)
            worst = max(worst, float(sub_times[order[k - 1]]) if k > 0 else np.inf)
            offset += c.n_workers
        out[t] = worst
    return out
