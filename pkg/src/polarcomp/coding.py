"""Encoding and sequential erasure decoding of matrix blocks.

Encoding pushes the input blocks left to right through the butterfly
circuit: stage j pairs nodes (i, i XOR 2^j); the upper node of a pair (bit j
clear) receives the sum of the pair, the lower node passes through. All
coding arithmetic is block addition and subtraction in float64 -- no
multiplications, matching the kernel [[1, 1], [0, 1]].

Decoding recovers the input-level blocks from any decodable subset of
worker outputs: channels are resolved in index order, each via a recursion
that needs both butterfly children for an upper node and either child for a
lower node; after every odd channel, knowledge is propagated forward so
later channels can reuse it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .blocks import OpCounter, PartitionedMatrix
from .construction import CodeConstruction
from .errors import UndecodablePatternError, ValidationError

__all__ = [
    "NodeGrid",
    "encode",
    "padded_input_blocks",
    "check_decodability",
    "decode",
    "decode_recursive",
    "generator_matrix",
]


def padded_input_blocks(construction: CodeConstruction, data_blocks) -> list:
    """Input-level block list: data blocks on data channels, zeros frozen."""
    if len(data_blocks) != construction.n_data:
        raise ValidationError(
            f"expected {construction.n_data} data blocks, got {len(data_blocks)}"
        )
    shape = data_blocks[0].shape
    zero = np.zeros(shape, dtype=np.float64)
    level = [zero] * construction.n_workers
    for idx, block in zip(construction.data_set, data_blocks):
        level[idx] = np.asarray(block, dtype=np.float64)
    return level


def encode(construction: CodeConstruction, data: PartitionedMatrix, counter: OpCounter | None = None) -> list:
    """Encode ``data`` into one coded block per worker.

    Performs exactly (N/2) * log2(N) block additions; ``counter`` (when
    given) is incremented once per addition.
    """
    if data.n_blocks != construction.n_data:
        raise ValidationError(
            f"data has {data.n_blocks} blocks but the construction carries {construction.n_data}"
        )
    for b in data.blocks:
        if not np.all(np.isfinite(b)):
            raise ValidationError("data blocks must be finite")
    level = padded_input_blocks(construction, data.blocks)
    n = construction.n_workers
    for stage in range(construction.n_stages):
        step = 1 << stage
        nxt = list(level)
        for upper in range(n):
            if upper & step:
                continue
            nxt[upper] = level[upper] + level[upper | step]
            if counter is not None:
                counter.add()
        level = nxt
    return level


def check_decodability(indicators, construction: CodeConstruction) -> bool:
    """Pure boolean twin of the decoder: no matrix data is touched."""
    flags = np.asarray(indicators)
    if flags.shape != (construction.n_workers,):
        raise ValidationError(
            f"expected {construction.n_workers} indicators, got shape {flags.shape}"
        )
    return kernels.check_decodable_1d(flags, construction.frozen_mask)


@dataclass
class NodeGrid:
    """The N x (log2 N + 1) lattice of optional blocks a decode works on.

    ``values[level][node]`` holds a block once known; ``known`` mirrors the
    presence of each value. ``block_ops`` counts every block the decoder
    materializes (frozen zeros and computed nodes; provided outputs are
    free), so a full-reception decode counts exactly N * log2(N).

    Forward propagation is event driven: every store enqueues the nodes one
    level up that it may enable, and nodes whose column exceeds the current
    sweep bound wait in a column-keyed heap. This computes exactly the same
    known-set as rescanning all columns up to the bound, in O(N log N)
    block operations overall.
    """

    n_workers: int
    n_stages: int
    values: list = field(repr=False)
    known: list = field(repr=False)
    block_ops: int = 0
    _pending: list = field(default_factory=list, repr=False)
    _gated: list = field(default_factory=list, repr=False)

    @classmethod
    def for_decode(cls, construction: CodeConstruction, outputs: dict, block_shape) -> "NodeGrid":
        n = construction.n_workers
        stages = construction.n_stages
        values = [[None] * n for _ in range(stages + 1)]
        known = [bytearray(n) for _ in range(stages + 1)]
        grid = cls(n_workers=n, n_stages=stages, values=values, known=known)
        for idx, block in outputs.items():
            values[stages][idx] = block
            known[stages][idx] = 1
        zero = np.zeros(block_shape, dtype=np.float64)
        for idx in construction.frozen_set:
            grid.store(idx, 0, zero)
        return grid

    def store(self, node: int, level: int, block) -> None:
        self.values[level][node] = block
        self.known[level][node] = 1
        self.block_ops += 1
        if level < self.n_stages:
            step = 1 << level
            self._pending.append((node | step, level + 1))
            self._pending.append((node & ~step, level + 1))


def decode_recursive(grid: NodeGrid, node: int, level: int) -> bool:
    """Resolve one node, recursing into its butterfly children.

    Returns whether the node's block is (now) known; computed blocks are
    stored in the grid. An upper node needs both children; a lower node
    needs either child, reusing its already-decoded upper partner when only
    the pair child is available.
    """
    n = grid.n_stages
    if level == n:
        return bool(grid.known[n][node])
    if grid.known[level][node]:
        return True
    step = 1 << level
    mate_node = node ^ step
    own = decode_recursive(grid, node, level + 1)
    mate = decode_recursive(grid, mate_node, level + 1)
    child_vals = grid.values[level + 1]
    if node & step:  # lower node of the pair
        if own:
            grid.store(node, level, child_vals[node])
            return True
        if mate:
            partner = grid.values[level][mate_node]
            if partner is None:
                raise UndecodablePatternError(
                    "internal inconsistency: upper partner missing during decode"
                )
            grid.store(node, level, child_vals[mate_node] - partner)
            return True
        return False
    if own and mate:  # upper node needs both children
        grid.store(node, level, child_vals[node] - child_vals[mate_node])
        return True
    return False


def _forward_fill(grid: NodeGrid, upto: int) -> None:
    """Propagate known blocks in the encoding direction for columns <= upto."""
    while grid._gated and grid._gated[0][0] <= upto:
        grid._pending.append(heapq.heappop(grid._gated))
    while grid._pending:
        node, level = grid._pending.pop()
        if grid.known[level][node]:
            continue
        if node > upto:
            heapq.heappush(grid._gated, (node, level))
            continue
        step = 1 << (level - 1)
        below_known = grid.known[level - 1]
        if node & step:
            if below_known[node]:
                grid.store(node, level, grid.values[level - 1][node])
        elif below_known[node] and below_known[node | step]:
            grid.store(
                node, level, grid.values[level - 1][node] + grid.values[level - 1][node | step]
            )


def decode(
    construction: CodeConstruction,
    outputs,
    x_cols: int | None = None,
    counter: OpCounter | None = None,
) -> PartitionedMatrix:
    """Recover the data blocks from available worker outputs.

    Parameters
    ----------
    outputs : iterable of (worker index, block)
        The available coded results; the availability pattern must pass
        :func:`check_decodability`, otherwise UndecodablePatternError is
        raised before any block work.
    x_cols : int, optional
        Expected block width, validated when given.
    counter : OpCounter, optional
        Receives the number of blocks the decoder materialized.
    """
    n = construction.n_workers
    by_index: dict = {}
    for idx, block in outputs:
        idx = int(idx)
        if not (0 <= idx < n):
            raise ValidationError(f"worker index {idx} out of range for N={n}")
        if idx in by_index:
            raise ValidationError(f"duplicate output for worker {idx}")
        by_index[idx] = np.asarray(block, dtype=np.float64)
    if not by_index:
        raise UndecodablePatternError("no worker outputs available")
    shape = next(iter(by_index.values())).shape
    for idx, block in by_index.items():
        if block.shape != shape:
            raise ValidationError(
                f"output block for worker {idx} has shape {block.shape}, expected {shape}"
            )
    if x_cols is not None and shape[1] != x_cols:
        raise ValidationError(f"blocks are {shape[1]} wide, expected x_cols={x_cols}")

    avail = np.zeros(n, dtype=np.uint8)
    avail[list(by_index)] = 1
    if not kernels.check_decodable_1d(avail, construction.frozen_mask):
        raise UndecodablePatternError(
            f"{int(avail.sum())} outputs with this pattern are not decodable for N={n}"
        )

    grid = NodeGrid.for_decode(construction, by_index, shape)
    data_blocks = []
    frozen = construction.frozen_mask
    for i in range(n):
        if not decode_recursive(grid, i, 0) and not frozen[i]:
            raise UndecodablePatternError(
                f"channel {i} unresolved despite a positive decodability check"
            )
        if not frozen[i]:
            data_blocks.append(grid.values[0][i])
        if i & 1:
            _forward_fill(grid, i)
    if counter is not None:
        counter.add(grid.block_ops)
    return PartitionedMatrix.from_blocks(data_blocks)


@lru_cache(maxsize=16)
def _generator_rows(n: int):
    level = [np.eye(n, dtype=np.float64)[i] for i in range(n)]
    stage = 0
    while (1 << stage) < n:
        step = 1 << stage
        nxt = list(level)
        for upper in range(n):
            if not upper & step:
                nxt[upper] = level[upper] + level[upper | step]
        level = nxt
        stage += 1
    rows = np.rint(np.stack(level)).astype(np.int64)
    rows.setflags(write=False)
    return rows


def generator_matrix(construction_or_n) -> np.ndarray:
    """N x N 0/1 generator obtained by pushing unit indicators through the circuit.

    Row w gives the input-level nodes whose blocks sum to worker w's coded
    block. Used by worker-side (in-memory) encoding. The returned array is
    cached and read-only.
    """
    n = construction_or_n if isinstance(construction_or_n, int) else construction_or_n.n_workers
    if n < 2 or (n & (n - 1)) != 0:
        raise ValidationError(f"N must be a power of 2, got {n}")
    return _generator_rows(n)
