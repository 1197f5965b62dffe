"""Gradient descent on least squares, driven by coded matrix multiplication.

Per iteration: x <- x - mu * (G x - c) with G = A^T A and c = A^T y. The
coded scheme encodes G once up front and computes G x through the straggler
simulator, waiting only for the first decodable set of N outputs; the
uncoded scheme splits G across N(1-eps) workers and waits for all of them.
Coding changes only the per-iteration time, never the iterate values, so
both schemes trace the same sequence of x_t; the trade-off is price (the
coded scheme pays for N workers) against time.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import PartitionedMatrix
from .construction import CodeConstruction
from .errors import DivergenceError, ValidationError
from .runtime import RuntimeModel, default_model
from .simulate import BackendConfig, CodedMatvecSession

__all__ = ["LeastSquaresProblem", "GdTrace", "residual", "default_step_size", "gd_solve"]


@dataclass
class LeastSquaresProblem:
    """minimize ||A x - y||^2; y (and x) may have r > 1 columns."""

    a: np.ndarray
    y: np.ndarray
    mu: float | None = None
    iterations: int = 100
    gram: np.ndarray | None = None  # A^T A, precomputed when provided
    aty: np.ndarray | None = None  # A^T y

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.a.ndim != 2 or self.a.shape[0] != self.y.shape[0]:
            raise ValidationError(
                f"incompatible shapes A {self.a.shape} vs y {self.y.shape}"
            )
        if self.mu is not None and self.mu <= 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")


@dataclass
class GdTrace:
    """Per-iteration record of the solve; times are strictly increasing."""

    iterations: list = field(default_factory=list)
    # rows: dict(iter, virtual_time_s, iter_seconds, wait_seconds,
    #            decode_seconds, residual, worker_seconds, checksum)

    def add(self, **row) -> None:
        if self.iterations and row["virtual_time_s"] <= self.iterations[-1]["virtual_time_s"]:
            raise ValidationError("trace times must be strictly increasing")
        self.iterations.append(row)

    def residuals(self) -> np.ndarray:
        return np.array([r["residual"] for r in self.iterations])

    def iter_times(self) -> np.ndarray:
        return np.array([r["iter_seconds"] for r in self.iterations])


def residual(a, x_t, y) -> float:
    """Frobenius norm of A x_t - y (the r > 1 case reduces column-wise)."""
    a = np.asarray(a, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if x_t.ndim == 1:
        x_t = x_t[:, None]
    if a.shape[1] != x_t.shape[0] or a.shape[0] != y.shape[0] or x_t.shape[1] != y.shape[1]:
        raise ValidationError("residual: inconsistent shapes")
    return float(np.linalg.norm(a @ x_t - y))


def default_step_size(gram: np.ndarray, iters: int = 50, seed: int = 0) -> float:
    """1 / lambda_max(G), with lambda_max estimated by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=gram.shape[0])
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(iters):
        w = gram @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            raise ValidationError("gram matrix is zero; no meaningful step size")
        v = w / lam
    return 1.0 / lam


def _checksum(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()[:16]


def gd_solve(
    problem: LeastSquaresProblem,
    scheme: str,
    construction: CodeConstruction | None = None,
    n_workers: int | None = None,
    model: RuntimeModel | None = None,
    seed: int = 0,
    backend: BackendConfig | None = None,
):
    """Run gradient descent; returns (final iterate, GdTrace).

    ``scheme`` is "coded" (requires ``construction``) or "uncoded"
    (requires ``n_workers``, conventionally N(1-eps)). Per-iteration virtual
    time is decodability time + decode time for the coded scheme and the
    max over the workers for the uncoded one; worker_seconds accumulates the
    billed compute seconds (the price proxy). With a nonzero crash
    probability the uncoded scheme can record an infinite iteration time --
    it has no redundancy to fall back on.

    Raises DivergenceError when the residual exceeds 10x its running
    minimum, which points at a too-large mu.
    """
    model = model or default_model()
    backend = backend or BackendConfig()
    a, y = problem.a, problem.y
    gram = problem.gram if problem.gram is not None else a.T @ a
    aty = problem.aty if problem.aty is not None else a.T @ y
    mu = problem.mu if problem.mu is not None else default_step_size(gram)

    if scheme == "coded":
        if construction is None:
            raise ValidationError("coded scheme requires a construction")
        session = CodedMatvecSession(gram, construction)
        n_billed = construction.n_workers
    elif scheme == "uncoded":
        if n_workers is None:
            raise ValidationError("uncoded scheme requires n_workers")
        if n_workers < 1:
            raise ValidationError("n_workers must be >= 1")
        part = PartitionedMatrix.partition(gram, n_workers)
        n_billed = n_workers
    else:
        raise ValidationError(f"scheme must be 'coded' or 'uncoded', got {scheme!r}")

    x = np.zeros((a.shape[1], y.shape[1]))
    trace = GdTrace()
    clock = 0.0
    best = math.inf
    for it in range(problem.iterations):
        if scheme == "coded":
            gx, timeline = session.multiply(x, model=model, seed=[int(seed), it], backend=backend)
            wait = timeline.decodability_time
            decode_s = timeline.completion_time - timeline.first("decode_start")
            iter_seconds = timeline.completion_time
            finite = [ev.time for ev in timeline.events if ev.kind == "finish"]
            worker_seconds = float(np.sum(finite))
        else:
            rng = np.random.default_rng([int(seed), it])
            times = model.sample_finish_times(rng, n_billed)
            wait = float(np.max(times))
            decode_s = 0.0
            iter_seconds = wait
            worker_seconds = float(np.sum(times[np.isfinite(times)]))
            gx = np.concatenate([blk @ x for blk in part.blocks], axis=0)[: gram.shape[0]]
        x = x - mu * (gx - aty)
        r = residual(a, x, y)
        if r > 10.0 * best and r > 1e-9:
            raise DivergenceError(
                f"residual {r:.3e} exceeds 10x its minimum {best:.3e}; mu={mu} is too large"
            )
        best = min(best, r)
        clock += iter_seconds
        trace.add(
            iter=it,
            virtual_time_s=clock,
            iter_seconds=iter_seconds,
            wait_seconds=wait,
            decode_seconds=decode_s,
            residual=r,
            worker_seconds=worker_seconds,
            checksum=_checksum(x),
        )
    return x, trace
