"""Decodability-time Monte Carlo and the local worker-pool backend.

Decodability time is the first instant at which the arrived outputs suffice
to recover the result. Per trial the simulator samples i.i.d. finish times
(crashes and timeouts become +inf), orders arrivals, and finds the earliest
accepting prefix of each scheme's checker. All checkers are monotone in the
available set, so the earliest accepting prefix is found by binary search;
the verdict is identical to re-checking after every single arrival.

The worker pool replaces the serverless platform at desk scale. The default
"virtual" mode is single threaded and fully deterministic given a seed:
sampled timestamps stand in for wall time and the decode cost is modeled as
block-ops x seconds_per_block_op. The opt-in "live" mode runs real threads
that sleep their sampled delay.
"""

from __future__ import annotations

import math
import queue as queue_mod
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .baselines import LtCode, lt_peelable, lt_symbol_neighbors, robust_soliton
from .blocks import OpCounter, PartitionedMatrix
from .coding import decode, encode
from .construction import CodeConstruction, build_construction
from .errors import UndecodablePatternError, ValidationError
from .runtime import RuntimeModel, default_model

__all__ = [
    "TaskResult",
    "TimelineEvent",
    "Timeline",
    "BackendConfig",
    "simulate_decodability_time",
    "CodedMatvecSession",
    "run_coded_matvec",
]


@dataclass
class TaskResult:
    """One worker's outcome; ``block`` is present exactly when status is done."""

    worker_id: int
    block: np.ndarray | None
    finish_time: float
    status: str  # done | timed_out | crashed

    def __post_init__(self):
        if (self.block is not None) != (self.status == "done"):
            raise ValidationError("block must be present iff status == 'done'")


@dataclass
class TimelineEvent:
    kind: str  # start | finish | collected | decodable | decode_start | decode_end
    worker_id: int  # -1 for whole-run events
    time: float


@dataclass
class Timeline:
    events: list = field(default_factory=list)

    def add(self, kind: str, worker_id: int, t: float) -> None:
        self.events.append(TimelineEvent(kind, worker_id, t))

    def first(self, kind: str) -> float:
        for ev in self.events:
            if ev.kind == kind:
                return ev.time
        raise KeyError(f"no {kind!r} event recorded")

    @property
    def decodability_time(self) -> float:
        return self.first("decodable")

    @property
    def completion_time(self) -> float:
        return self.first("decode_end")

    def rows(self) -> list:
        return [(ev.kind, ev.worker_id, ev.time) for ev in self.events]


@dataclass
class BackendConfig:
    mode: str = "virtual"  # virtual | live
    threads: int = 4
    seconds_per_block_op: float = 1e-4

    def __post_init__(self):
        if self.mode not in ("virtual", "live"):
            raise ValidationError(f"mode must be 'virtual' or 'live', got {self.mode!r}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")


# ------------------------------------------------- decodability times ----


def _trial_rng(seed: int, trial: int, stream: int = 0):
    return np.random.default_rng([int(seed), int(trial), int(stream)])


def _sorted_arrivals(times: np.ndarray):
    order = np.argsort(times, kind="stable")
    n_finite = int(np.sum(np.isfinite(times)))
    return order, n_finite


def _polar_construction(params: dict) -> CodeConstruction:
    if "construction" in params:
        return params["construction"]
    return build_construction(params["n"], params["epsilon"], params.get("n_data"))


def _time_of_prefix(times: np.ndarray, order: np.ndarray, k: int) -> float:
    return float(times[order[k - 1]]) if k > 0 else math.inf


def simulate_decodability_time(
    scheme: str,
    params: dict,
    model: RuntimeModel | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """Decodability times over ``trials`` independent runs.

    Schemes and their parameters:

    * ``polar``: {n, epsilon[, n_data]} or {construction} -- first prefix of
      arrivals accepted by the 1D checker.
    * ``mds``: {n, k} -- the k-th order statistic of the finish times.
    * ``lt``: {n, n_input[, c, delta]} -- one symbol per worker; first
      prefix whose symbol graph peels completely.
    * ``polar2d``: {n1, n2, epsilon1, epsilon2[, n_data1, n_data2]} or
      {row_construction, col_construction} -- first prefix accepted by the
      2D checker.
    * ``mds2d``: same parameters as polar2d; the d1*d2-th order statistic
      (= ceil(9N/16) at per-side rate 3/4).

    Identical (seed, trial) pairs reuse identical finish-time samples across
    schemes of the same total worker count, so per-trial comparisons are
    paired. A trial whose full available set never decodes records +inf.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    model = model or default_model()
    out = np.empty(int(trials), dtype=np.float64)

    if scheme == "polar":
        c = _polar_construction(params)
        for t in range(trials):
            times = model.sample_finish_times(_trial_rng(seed, t), c.n_workers)
            order, n_fin = _sorted_arrivals(times)
            k = kernels.first_decodable_prefix_1d(order, c.frozen_mask, n_fin)
            out[t] = _time_of_prefix(times, order, k) if k > 0 else math.inf
    elif scheme == "mds":
        n, k = int(params["n"]), int(params["k"])
        if not (0 < k <= n):
            raise ValidationError(f"need 0 < k <= n, got k={k}, n={n}")
        for t in range(trials):
            times = model.sample_finish_times(_trial_rng(seed, t), n)
            srt = np.sort(times)
            out[t] = float(srt[k - 1])
    elif scheme == "lt":
        n = int(params["n"])
        n_input = int(params["n_input"])
        dist = robust_soliton(n_input, params.get("c", 0.03), params.get("delta", 0.5))
        for t in range(trials):
            times = model.sample_finish_times(_trial_rng(seed, t), n)
            order, n_fin = _sorted_arrivals(times)
            code = LtCode(n_input=n_input, degree_distribution=tuple(dist),
                          seed=int(np.random.default_rng([seed, t, 1]).integers(2**62)))
            nbrs = [lt_symbol_neighbors(code, i) for i in range(n)]
            k = _first_peelable_prefix(order, nbrs, n_input, n_fin)
            out[t] = _time_of_prefix(times, order, k) if k > 0 else math.inf
    elif scheme in ("polar2d", "mds2d"):
        if "row_construction" in params:
            row_c, col_c = params["row_construction"], params["col_construction"]
        else:
            row_c = build_construction(params["n1"], params["epsilon1"], params.get("n_data1"))
            col_c = build_construction(params["n2"], params["epsilon2"], params.get("n_data2"))
        n1, n2 = row_c.n_workers, col_c.n_workers
        n_total = n1 * n2
        if scheme == "mds2d":
            threshold = row_c.n_data * col_c.n_data
            for t in range(trials):
                times = model.sample_finish_times(_trial_rng(seed, t), n_total)
                srt = np.sort(times)
                out[t] = float(srt[threshold - 1])
        else:
            for t in range(trials):
                times = model.sample_finish_times(_trial_rng(seed, t), n_total)
                order, n_fin = _sorted_arrivals(times)
                k = kernels.first_decodable_prefix_2d(
                    order, n1, n2, row_c.frozen_mask, col_c.frozen_mask, n_fin
                )
                out[t] = _time_of_prefix(times, order, k) if k > 0 else math.inf
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    return out


def _first_peelable_prefix(order, neighbor_lists, n_input: int, n_usable: int) -> int:
    """Binary search the earliest peelable arrival prefix (monotone check)."""
    lo, hi = n_input, n_usable

    def peelable(k: int) -> bool:
        return lt_peelable([neighbor_lists[order[j]] for j in range(k)], n_input)

    if hi < lo or not peelable(hi):
        return -1
    while lo < hi:
        mid = (lo + hi) // 2
        if peelable(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


# ------------------------------------------------------- worker pool ----


class CodedMatvecSession:
    """Encode A once, then run coded multiplications against many x's."""

    def __init__(self, a, construction: CodeConstruction):
        self.construction = construction
        a = np.asarray(a, dtype=np.float64)
        self.rows = a.shape[0]
        self.partition = PartitionedMatrix.partition(a, construction.n_data)
        self.coded_blocks = encode(construction, self.partition)

    def multiply(
        self,
        x,
        model: RuntimeModel | None = None,
        seed: int = 0,
        backend: BackendConfig | None = None,
        delays=None,
    ):
        """One coded multiply; returns (A @ x, timeline of the run)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        backend = backend or BackendConfig()
        model = model or default_model()
        if backend.mode == "live":
            return self._multiply_live(x, model, seed, backend)
        return self._multiply_virtual(x, model, seed, backend, delays)

    # virtual mode: sampled timestamps, no wall clock, bit-reproducible
    def _multiply_virtual(self, x, model, seed, backend, delays):
        c = self.construction
        n = c.n_workers
        rng = np.random.default_rng(seed)
        if delays is None:
            times, _ = model.sample_with_status(rng, n)
        else:
            times = np.asarray(delays, dtype=np.float64)
            if times.shape != (n,):
                raise ValidationError(f"delays must have shape ({n},)")
        timeline = Timeline()
        for w in range(n):
            timeline.add("start", w, 0.0)
        order, n_fin = _sorted_arrivals(times)
        for j in range(n_fin):
            timeline.add("finish", int(order[j]), float(times[order[j]]))
        k = kernels.first_decodable_prefix_1d(order, c.frozen_mask, n_fin)
        if k < 0:
            raise UndecodablePatternError(
                f"run never became decodable ({n_fin}/{n} outputs arrived); "
                f"partial timeline: {timeline.rows()}"
            )
        accepted = [int(order[j]) for j in range(k)]
        t_dec = float(times[order[k - 1]])
        for w in accepted:
            timeline.add("collected", w, float(times[w]))
        timeline.add("decodable", -1, t_dec)
        counter = OpCounter()
        outputs = [(w, self.coded_blocks[w] @ x) for w in accepted]
        result = decode(c, outputs, x_cols=x.shape[1], counter=counter)
        timeline.add("decode_start", -1, t_dec)
        timeline.add("decode_end", -1, t_dec + counter.block_ops * backend.seconds_per_block_op)
        y = result.stack(strip_padding=False)[: self.rows]
        return y, timeline

    # live mode: real threads sleeping their sampled delay
    def _multiply_live(self, x, model, seed, backend):
        c = self.construction
        n = c.n_workers
        rng = np.random.default_rng(seed)
        times, statuses = model.sample_with_status(rng, n)
        results: queue_mod.Queue = queue_mod.Queue()
        timeline = Timeline()
        t0 = time.perf_counter()
        stop = threading.Event()

        def task(w: int):
            if statuses[w] != "done":
                return  # permanent erasure: no result is ever produced
            deadline = t0 + times[w]
            while not stop.is_set():
                remaining = deadline - time.perf_counter()
                if remaining <= 0:
                    break
                time.sleep(min(remaining, 0.01))
            if stop.is_set():
                return
            block = self.coded_blocks[w] @ x
            results.put(TaskResult(w, block, time.perf_counter() - t0, "done"))

        avail = np.zeros(n, dtype=np.uint8)
        collected: dict = {}
        n_expected = sum(1 for s in statuses if s == "done")
        finite = times[np.isfinite(times)]
        wait_budget = (float(finite.max()) if finite.size else 0.0) + 30.0
        with ThreadPoolExecutor(max_workers=backend.threads) as pool:
            for w in range(n):
                timeline.add("start", w, 0.0)
                pool.submit(task, w)
            decodable_at = None
            while len(collected) < n_expected:
                try:
                    res = results.get(timeout=wait_budget)
                except queue_mod.Empty:
                    stop.set()
                    raise UndecodablePatternError(
                        f"live pool stalled after {wait_budget:.1f}s; "
                        f"partial timeline: {timeline.rows()}"
                    )
                collected[res.worker_id] = res
                timeline.add("finish", res.worker_id, res.finish_time)
                timeline.add("collected", res.worker_id, res.finish_time)
                avail[res.worker_id] = 1
                if kernels.check_decodable_1d(avail, c.frozen_mask):
                    decodable_at = res.finish_time
                    break
            stop.set()
        if decodable_at is None:
            raise UndecodablePatternError(
                f"live run never became decodable; partial timeline: {timeline.rows()}"
            )
        timeline.add("decodable", -1, decodable_at)
        timeline.add("decode_start", -1, time.perf_counter() - t0)
        outputs = [(w, r.block) for w, r in sorted(collected.items())]
        result = decode(c, outputs, x_cols=x.shape[1])
        timeline.add("decode_end", -1, time.perf_counter() - t0)
        y = result.stack(strip_padding=False)[: self.rows]
        return y, timeline


def run_coded_matvec(
    a,
    x,
    construction: CodeConstruction,
    backend: BackendConfig | None = None,
    model: RuntimeModel | None = None,
    seed: int = 0,
    delays=None,
):
    """Encode A, farm out the block multiplies, decode at first decodability.

    Returns (A @ x, timeline). ``delays`` injects per-worker finish times
    (inf = crash) for reproducible studies; otherwise they are sampled from
    ``model`` with ``seed``.
    """
    session = CodedMatvecSession(a, construction)
    return session.multiply(x, model=model, seed=seed, backend=backend, delays=delays)
