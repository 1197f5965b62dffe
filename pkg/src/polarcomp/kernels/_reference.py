"""Pure-Python decodability kernels.

The 1D check runs the sequential decoder on boolean availability flags:
channels are resolved in index order; resolving a node needs both of its
butterfly children if it is the upper node of its pair and either child if
it is the lower one; after every odd channel, knowledge is propagated in the
encoding direction so later channels can reuse it.

The compiled twin (``_compiled.pyx``) implements the propagation as the
literal rescan of all columns up to the current one; here the propagation is
event driven (every new mark enqueues the fills it may enable, and fills
whose column is past the sweep bound wait in a heap), which reaches exactly
the same known-set with O(N log N) work instead of O(N^2 log N). The test
suite cross-checks the two backends on exhaustive and randomized patterns.
"""

from __future__ import annotations

import heapq

BACKEND = "python"


def _stages(n: int) -> int:
    s = n.bit_length() - 1
    if n < 1 or (1 << s) != n:
        raise ValueError(f"length must be a power of 2, got {n}")
    return s


def check_decodable_1d(avail, frozen) -> bool:
    """True iff the availability pattern determines every data channel.

    ``avail`` flags worker outputs that arrived; ``frozen`` flags frozen
    channels. Both are 0/1 sequences of the same power-of-2 length.
    """
    n_workers = len(avail)
    if len(frozen) != n_workers:
        raise ValueError("avail and frozen must have the same length")
    n = _stages(n_workers)
    known = [bytearray(n_workers) for _ in range(n + 1)]
    pending = []  # candidate forward fills (node, level)
    gated = []  # fills blocked by the column bound, keyed by column

    def mark(node: int, level: int) -> None:
        known[level][node] = 1
        if level < n:
            step = 1 << level
            pending.append((node | step, level + 1))
            pending.append((node & ~step, level + 1))

    top = known[n]
    for i in range(n_workers):
        if avail[i]:
            top[i] = 1
    for i in range(n_workers):
        if frozen[i]:
            mark(i, 0)

    def resolve(node: int, level: int) -> bool:
        if level == n:
            return bool(known[n][node])
        if known[level][node]:
            return True
        step = 1 << level
        child = known[level + 1]
        own = child[node] or resolve(node, level + 1)
        mate = child[node ^ step] or resolve(node ^ step, level + 1)
        if node & step:
            if own or mate:
                mark(node, level)
                return True
        elif own and mate:
            mark(node, level)
            return True
        return False

    def sweep(upto: int) -> None:
        while gated and gated[0][0] <= upto:
            pending.append(heapq.heappop(gated))
        while pending:
            node, level = pending.pop()
            if known[level][node]:
                continue
            if node > upto:
                heapq.heappush(gated, (node, level))
                continue
            step = 1 << (level - 1)
            below = known[level - 1]
            if node & step:
                if below[node]:
                    mark(node, level)
            elif below[node] and below[node | step]:
                mark(node, level)

    for i in range(n_workers):
        if not resolve(i, 0) and not frozen[i]:
            return False
        if i & 1:
            sweep(i)
    return True


def first_decodable_prefix_1d(order, frozen, n_usable: int) -> int:
    """Smallest k such that the first k arrivals in ``order`` are decodable.

    ``order`` lists worker indices by arrival time; only the first
    ``n_usable`` entries ever arrive (the rest crashed or timed out).
    Returns -1 when no prefix is decodable. Decodability is monotone in the
    available set, so a binary search over prefix length is exact.
    """
    n_workers = len(order)
    n_data = n_workers - sum(1 for f in frozen if f)

    def decodable(k: int) -> bool:
        avail = bytearray(n_workers)
        for j in range(k):
            avail[order[j]] = 1
        return check_decodable_1d(avail, frozen)

    lo, hi = n_data, n_usable
    if hi < lo or not decodable(hi):
        return -1
    while lo < hi:
        mid = (lo + hi) // 2
        if decodable(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def check_decodable_2d(known, n1: int, n2: int, frozen_rows, frozen_cols) -> bool:
    """True iff row/column sweeps can complete the product grid.

    ``known`` is a flat 0/1 sequence of length n1*n2 in row-major order.
    A row of the grid is a codeword of the column-side code (so it is
    checked against ``frozen_cols``) and vice versa. Any line whose pattern
    passes the 1D check becomes fully known; sweeps repeat to a fixed point.
    """
    grid = [bytearray(known[i * n2 : (i + 1) * n2]) for i in range(n1)]
    while True:
        all_known = True
        progress = False
        for i in range(n1):
            row = grid[i]
            missing = 0 in row
            if missing and check_decodable_1d(row, frozen_cols):
                grid[i] = bytearray(b"\x01" * n2)
                progress = True
                missing = False
            all_known = all_known and not missing
        for j in range(n2):
            col = bytearray(grid[i][j] for i in range(n1))
            if 0 in col and check_decodable_1d(col, frozen_rows):
                for i in range(n1):
                    grid[i][j] = 1
                progress = True
        if all_known:
            return True
        if not progress:
            return False


def first_decodable_prefix_2d(order, n1: int, n2: int, frozen_rows, frozen_cols, n_usable: int) -> int:
    """2D analogue of :func:`first_decodable_prefix_1d` over flat cell ids."""
    d1 = n1 - sum(1 for f in frozen_rows if f)
    d2 = n2 - sum(1 for f in frozen_cols if f)

    def decodable(k: int) -> bool:
        known = bytearray(n1 * n2)
        for j in range(k):
            known[order[j]] = 1
        return check_decodable_2d(known, n1, n2, frozen_rows, frozen_cols)

    lo, hi = d1 * d2, n_usable
    if hi < lo or not decodable(hi):
        return -1
    while lo < hi:
        mid = (lo + hi) // 2
        if decodable(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo
