"""Two-sided coding for the matrix product AB.

A is row-partitioned and encoded with the row-side code; B is
column-partitioned and encoded with the column-side code (implemented as 1D
encoding of the blocks of B transposed, then transposing back, so every row
and every column of the product grid is a codeword of the audited 1D code).
Worker (i, j) multiplies coded row block i by coded column block j. The
decoder sweeps rows then columns: any line whose availability pattern is 1D
decodable is decoded and re-encoded to fill its missing cells; when the grid
is complete, all rows and then all columns are decoded and the frozen
entries dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .blocks import PartitionedMatrix
from .coding import check_decodability, decode, encode, padded_input_blocks
from .construction import CodeConstruction
from .errors import UndecodablePatternError, ValidationError

__all__ = [
    "ProductGrid",
    "encode_2d",
    "compute_product_grid",
    "check_decodability_2d",
    "decode_2d",
]


def encode_2d(
    a: PartitionedMatrix,
    b: PartitionedMatrix,
    row_c: CodeConstruction,
    col_c: CodeConstruction,
):
    """Coded operands for the N1 x N2 task grid.

    Returns (a_coded, b_coded): N1 coded row blocks of A and N2 coded column
    blocks of B; task (i, j) multiplies a_coded[i] @ b_coded[j].
    """
    if a.n_blocks != row_c.n_data:
        raise ValidationError(
            f"A has {a.n_blocks} row blocks but the row code carries {row_c.n_data}"
        )
    if b.n_blocks != col_c.n_data:
        raise ValidationError(
            f"B has {b.n_blocks} column blocks but the column code carries {col_c.n_data}"
        )
    if b.axis != 1:
        raise ValidationError("B must be partitioned along columns (axis=1)")
    a_coded = encode(row_c, a)
    bt = PartitionedMatrix.from_blocks([blk.T for blk in b.blocks])
    b_coded = [blk.T for blk in encode(col_c, bt)]
    return a_coded, b_coded


def compute_product_grid(
    a_coded,
    b_coded,
    row_c: CodeConstruction,
    col_c: CodeConstruction,
    available=None,
) -> "ProductGrid":
    """Run the worker tasks (optionally only an available subset of cells)."""
    n1, n2 = row_c.n_workers, col_c.n_workers
    grid = ProductGrid.empty(row_c, col_c)
    cells = available if available is not None else [(i, j) for i in range(n1) for j in range(n2)]
    for i, j in cells:
        grid.set_cell(i, j, a_coded[i] @ b_coded[j])
    return grid


@dataclass
class ProductGrid:
    """N1 x N2 grid of optional worker products plus availability flags."""

    row_construction: CodeConstruction
    col_construction: CodeConstruction
    cells: list = field(repr=False)
    known: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, row_c: CodeConstruction, col_c: CodeConstruction) -> "ProductGrid":
        n1, n2 = row_c.n_workers, col_c.n_workers
        return cls(
            row_construction=row_c,
            col_construction=col_c,
            cells=[[None] * n2 for _ in range(n1)],
            known=np.zeros((n1, n2), dtype=bool),
        )

    @property
    def n1(self) -> int:
        return self.row_construction.n_workers

    @property
    def n2(self) -> int:
        return self.col_construction.n_workers

    def set_cell(self, i: int, j: int, block) -> None:
        self.cells[i][j] = np.asarray(block, dtype=np.float64)
        self.known[i, j] = True


def check_decodability_2d(known, row_c: CodeConstruction, col_c: CodeConstruction) -> bool:
    """Boolean fixed point of the row/column sweeps; same verdict as decoding."""
    flags = np.asarray(known, dtype=bool)
    if flags.shape != (row_c.n_workers, col_c.n_workers):
        raise ValidationError(
            f"known grid must be {row_c.n_workers} x {col_c.n_workers}, got {flags.shape}"
        )
    return kernels.check_decodable_2d(
        flags, row_c.n_workers, col_c.n_workers, row_c.frozen_mask, col_c.frozen_mask
    )


def _decode_line(construction: CodeConstruction, blocks_by_index: dict):
    outputs = sorted(blocks_by_index.items())
    return decode(construction, outputs).blocks


def _fill_line(grid: ProductGrid, construction: CodeConstruction, data_blocks, line: int, is_row: bool) -> None:
    u = padded_input_blocks(construction, data_blocks)
    part = PartitionedMatrix.from_blocks([u[i] for i in construction.data_set])
    coded = encode(construction, part)
    for idx, block in enumerate(coded):
        if is_row:
            if not grid.known[line, idx]:
                grid.set_cell(line, idx, block)
        else:
            if not grid.known[idx, line]:
                grid.set_cell(idx, line, block)


def decode_2d(grid: ProductGrid) -> np.ndarray:
    """Recover the full product of the coded operands from a partial grid.

    The result rows/cols correspond to the padded partitioned operands; the
    caller strips padding (see :func:`polarcomp.simulate.coded_matmul`).
    Raises UndecodablePatternError when a full row+column sweep pair makes
    no progress while cells are still missing.
    """
    row_c, col_c = grid.row_construction, grid.col_construction
    n1, n2 = grid.n1, grid.n2
    while not grid.known.all():
        progress = False
        for i in range(n1):
            pattern = grid.known[i, :]
            if not pattern.all() and check_decodability(pattern, col_c):
                data = _decode_line(col_c, {j: grid.cells[i][j] for j in range(n2) if pattern[j]})
                _fill_line(grid, col_c, data, i, is_row=True)
                progress = True
        for j in range(n2):
            pattern = grid.known[:, j]
            if not pattern.all() and check_decodability(pattern, row_c):
                data = _decode_line(row_c, {i: grid.cells[i][j] for i in range(n1) if pattern[i]})
                _fill_line(grid, row_c, data, j, is_row=False)
                progress = True
        if not progress and not grid.known.all():
            raise UndecodablePatternError(
                "2D pattern not decodable: a full row+column sweep made no progress"
            )
    # grid complete: decode all rows, then all columns, then drop frozen entries
    row_data = [
        _decode_line(col_c, {j: grid.cells[i][j] for j in range(n2)}) for i in range(n1)
    ]
    result_rows = []
    for q in range(col_c.n_data):
        column_blocks = _decode_line(row_c, {i: row_data[i][q] for i in range(n1)})
        result_rows.append(column_blocks)
    # result_rows[q][k] = (A_k B_q); assemble in row-major block order
    return np.concatenate(
        [np.concatenate([result_rows[q][k] for q in range(col_c.n_data)], axis=1)
         for k in range(row_c.n_data)],
        axis=0,
    )
