"""Dense matrix partitioning into equal blocks, with zero padding.

A matrix split into d row (or column) blocks must have a dimension divisible
by d; when it is not, the matrix is zero-padded up to the next multiple and
the padding is stripped again after decoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = ["PartitionedMatrix", "OpCounter"]


@dataclass
class OpCounter:
    """Instrumented counter for block-level operations."""

    block_ops: int = 0

    def add(self, n: int = 1) -> None:
        self.block_ops += n


@dataclass
class PartitionedMatrix:
    """A real matrix split into ``n_blocks`` equal slices along one axis.

    ``rows`` and ``cols`` record the original (pre-padding) shape; the
    blocks themselves may include zero padding at the end of the split axis.
    """

    rows: int
    cols: int
    n_blocks: int
    blocks: list = field(repr=False)
    axis: int = 0

    def __post_init__(self):
        if self.n_blocks < 1 or len(self.blocks) != self.n_blocks:
            raise ValidationError("blocks list must have n_blocks entries")
        shape = self.blocks[0].shape
        for b in self.blocks:
            if b.shape != shape:
                raise ValidationError("all blocks must share the same shape")
        if self.axis not in (0, 1):
            raise ValidationError("axis must be 0 (rows) or 1 (columns)")

    @property
    def block_shape(self) -> tuple:
        return self.blocks[0].shape

    @classmethod
    def partition(cls, matrix, n_blocks: int, axis: int = 0) -> "PartitionedMatrix":
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValidationError(f"expected a 2D matrix, got ndim={m.ndim}")
        if n_blocks < 1:
            raise ValidationError(f"n_blocks must be positive, got {n_blocks}")
        rows, cols = m.shape
        size = m.shape[axis]
        padded = -(-size // n_blocks) * n_blocks
        if padded != size:
            pad = [(0, 0), (0, 0)]
            pad[axis] = (0, padded - size)
            m = np.pad(m, pad)
        blocks = [np.ascontiguousarray(b) for b in np.split(m, n_blocks, axis=axis)]
        return cls(rows=rows, cols=cols, n_blocks=n_blocks, blocks=blocks, axis=axis)

    @classmethod
    def from_blocks(cls, blocks, axis: int = 0) -> "PartitionedMatrix":
        blocks = [np.asarray(b, dtype=np.float64) for b in blocks]
        stacked_rows = sum(b.shape[0] for b in blocks) if axis == 0 else blocks[0].shape[0]
        stacked_cols = blocks[0].shape[1] if axis == 0 else sum(b.shape[1] for b in blocks)
        return cls(rows=stacked_rows, cols=stacked_cols, n_blocks=len(blocks), blocks=blocks, axis=axis)

    def stack(self, strip_padding: bool = True) -> np.ndarray:
        """Reassemble the full matrix, dropping padding unless told otherwise."""
        full = np.concatenate(self.blocks, axis=self.axis)
        if strip_padding:
            full = full[: self.rows, : self.cols]
        return full
