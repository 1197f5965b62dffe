"""MDS (real-valued Reed-Solomon) and LT (fountain) coded-computation baselines.

The MDS baseline is the naive full-precision codec: encoding is a Vandermonde
combination of the data blocks (O(N^2)); decoding solves a k x k Vandermonde
system by Gaussian elimination with partial pivoting (O(N^3)) and becomes
ill-conditioned as k grows, which is the instability the speed comparison
demonstrates. Evaluation points default to Chebyshev nodes on [-1, 1];
equispaced points are available for the instability demonstration.

The LT baseline draws symbol degrees from the robust soliton distribution
and decodes by peeling; every symbol's neighbor list is re-derivable from
(stream seed, symbol index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import PartitionedMatrix
from .errors import ConditioningError, ValidationError

__all__ = [
    "MdsCode",
    "chebyshev_points",
    "equispaced_points",
    "make_mds_code",
    "mds_encode",
    "mds_decode",
    "LtCode",
    "LtSymbol",
    "robust_soliton",
    "lt_symbol_neighbors",
    "lt_encode_stream",
    "lt_peel_decode",
    "lt_peelable",
]


# ---------------------------------------------------------------- MDS ----


@dataclass(frozen=True)
class MdsCode:
    """Any k of the n outputs recover the k data blocks."""

    n: int
    k: int
    evaluation_points: tuple

    def __post_init__(self):
        if not (0 < self.k <= self.n):
            raise ValidationError(f"need 0 < k <= n, got k={self.k}, n={self.n}")
        pts = tuple(float(p) for p in self.evaluation_points)
        if len(pts) != self.n:
            raise ValidationError("need one evaluation point per output")
        if len(set(pts)) != self.n:
            raise ValidationError("evaluation points must be pairwise distinct")
        object.__setattr__(self, "evaluation_points", pts)


def chebyshev_points(n: int) -> np.ndarray:
    return np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))


def equispaced_points(n: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, n)


def make_mds_code(n: int, k: int, points: str = "chebyshev") -> MdsCode:
    if points == "chebyshev":
        pts = chebyshev_points(n)
    elif points == "equispaced":
        pts = equispaced_points(n)
    else:
        raise ValidationError(f"unknown point set {points!r}")
    return MdsCode(n=n, k=k, evaluation_points=tuple(pts))


def _vandermonde(points, k: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return np.vander(pts, k, increasing=True)


def mds_encode(data: PartitionedMatrix, code: MdsCode) -> list:
    """Output j = sum_i data_i * point_j**i."""
    if data.n_blocks != code.k:
        raise ValidationError(f"data has {data.n_blocks} blocks, code expects {code.k}")
    v = _vandermonde(code.evaluation_points, code.k)
    stacked = np.stack(data.blocks)
    coded = np.tensordot(v, stacked, axes=1)
    return [np.ascontiguousarray(coded[j]) for j in range(code.n)]


def mds_decode(outputs, code: MdsCode) -> PartitionedMatrix:
    """Solve the k x k Vandermonde system given exactly k outputs.

    Raises ConditioningError when the system is numerically singular, which
    is expected behaviour for large n with full-precision data.
    """
    outputs = list(outputs)
    if len(outputs) != code.k:
        raise ValidationError(f"need exactly {code.k} outputs, got {len(outputs)}")
    idx = [int(i) for i, _ in outputs]
    if len(set(idx)) != code.k or not all(0 <= i < code.n for i in idx):
        raise ValidationError("output indices must be distinct and in range")
    v = _vandermonde([code.evaluation_points[i] for i in idx], code.k)
    stacked = np.stack([np.asarray(b, dtype=np.float64) for _, b in outputs])
    shape = stacked.shape[1:]
    try:
        sol = np.linalg.solve(v, stacked.reshape(code.k, -1))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"Vandermonde system is numerically singular: {exc}") from exc
    blocks = [np.ascontiguousarray(sol[i].reshape(shape)) for i in range(code.k)]
    return PartitionedMatrix.from_blocks(blocks)


# ----------------------------------------------------------------- LT ----


def robust_soliton(n_input: int, c: float = 0.03, delta: float = 0.5) -> np.ndarray:
    """Robust soliton degree distribution over degrees 1..n_input.

    Ideal soliton plus the ripple term R/(i*n) and a spike at ceil(n/R).
    The spike position is capped at n_input and a nonpositive spike mass
    (which the textbook formula produces when R < delta) is dropped, so the
    distribution stays valid for small n_input.
    """
    n = int(n_input)
    if n < 2:
        raise ValidationError(f"n_input must be >= 2, got {n}")
    c = float(c)
    delta = float(delta)
    if c <= 0.0:
        raise ValidationError(f"c must be positive, got {c}")
    if not (0.0 < delta < 1.0):
        raise ValidationError(f"delta must be in (0, 1), got {delta}")
    rho = np.zeros(n + 1)
    rho[1] = 1.0 / n
    degrees = np.arange(2, n + 1)
    rho[2:] = 1.0 / (degrees * (degrees - 1.0))
    r = c * math.log(n / delta) * math.sqrt(n)
    spike = min(n, math.ceil(n / r))
    tau = np.zeros(n + 1)
    for i in range(1, spike):
        tau[i] = r / (i * n)
    spike_mass = r * math.log(r / delta) / n if r > delta else 0.0
    tau[spike] += max(spike_mass, 0.0)
    mu = rho + tau
    return mu[1:] / mu[1:].sum()


@dataclass(frozen=True)
class LtCode:
    n_input: int
    degree_distribution: tuple
    seed: int = 0

    def __post_init__(self):
        dist = np.asarray(self.degree_distribution, dtype=np.float64)
        if dist.shape != (self.n_input,):
            raise ValidationError("degree_distribution must cover degrees 1..n_input")
        if np.any(dist < 0.0) or abs(dist.sum() - 1.0) > 1e-9:
            raise ValidationError("degree_distribution must be a probability vector")
        object.__setattr__(self, "degree_distribution", tuple(float(p) for p in dist))


@dataclass
class LtSymbol:
    """One coded block plus the source indices it sums over."""

    index: int
    neighbors: tuple
    block: np.ndarray | None = None


def lt_symbol_neighbors(code: LtCode, index: int) -> tuple:
    """Neighbor list of symbol ``index``, re-derivable from (seed, index)."""
    rng = np.random.default_rng([code.seed, int(index)])
    dist = np.asarray(code.degree_distribution)
    degree = int(rng.choice(np.arange(1, code.n_input + 1), p=dist))
    neighbors = rng.choice(code.n_input, size=degree, replace=False)
    return tuple(int(v) for v in np.sort(neighbors))


def lt_encode_stream(data: PartitionedMatrix, code: LtCode, count: int) -> list:
    """``count`` coded symbols, each the sum of its neighbor source blocks."""
    if data.n_blocks != code.n_input:
        raise ValidationError(f"data has {data.n_blocks} blocks, code expects {code.n_input}")
    symbols = []
    for idx in range(int(count)):
        nbrs = lt_symbol_neighbors(code, idx)
        block = data.blocks[nbrs[0]].copy()
        for j in nbrs[1:]:
            block += data.blocks[j]
        symbols.append(LtSymbol(index=idx, neighbors=nbrs, block=block))
    return symbols


def lt_peel_decode(symbols, n_input: int):
    """Peel degree-1 symbols until all sources are recovered.

    Returns the recovered PartitionedMatrix, or None when the ripple empties
    before every source block is known (failure is an outcome, not an error).
    """
    remaining = []  # (neighbor set, block copy)
    membership = [[] for _ in range(n_input)]  # source -> symbol slots
    for sym in symbols:
        slot = len(remaining)
        nbrs = set(sym.neighbors)
        remaining.append([nbrs, None if sym.block is None else sym.block.copy()])
        for s in nbrs:
            membership[s].append(slot)
    recovered: dict = {}
    ripple = [slot for slot, (nbrs, _) in enumerate(remaining) if len(nbrs) == 1]
    while ripple:
        slot = ripple.pop()
        nbrs, block = remaining[slot]
        if len(nbrs) != 1:
            continue
        (src,) = nbrs
        nbrs.clear()
        if src in recovered:
            continue
        recovered[src] = block
        for other in membership[src]:
            onbrs, oblock = remaining[other]
            if src in onbrs:
                onbrs.discard(src)
                if oblock is not None and block is not None:
                    oblock -= block
                if len(onbrs) == 1:
                    ripple.append(other)
    if len(recovered) != n_input:
        return None
    return PartitionedMatrix.from_blocks([recovered[i] for i in range(n_input)])


def lt_peelable(neighbor_lists, n_input: int) -> bool:
    """Data-free peeling check used by the decodability-time simulations."""
    symbols = [LtSymbol(index=i, neighbors=tuple(nbrs)) for i, nbrs in enumerate(neighbor_lists)]
    remaining = [set(s.neighbors) for s in symbols]
    membership = [[] for _ in range(n_input)]
    for slot, nbrs in enumerate(remaining):
        for s in nbrs:
            membership[s].append(slot)
    recovered = set()
    ripple = [slot for slot, nbrs in enumerate(remaining) if len(nbrs) == 1]
    while ripple:
        slot = ripple.pop()
        nbrs = remaining[slot]
        if len(nbrs) != 1:
            continue
        (src,) = nbrs
        nbrs.clear()
        if src in recovered:
            continue
        recovered.add(src)
        for other in membership[src]:
            onbrs = remaining[other]
            if src in onbrs:
                onbrs.discard(src)
                if len(onbrs) == 1:
                    ripple.append(other)
    return len(recovered) == n_input
