# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled decodability kernels; semantics identical to ``_reference``."""

from libc.stdlib cimport calloc, free
from libc.string cimport memset

BACKEND = "compiled"


cdef int _resolve(unsigned char* known, int n_workers, int n, int node, int level) noexcept nogil:
    cdef int step, own, mate
    if level == n:
        return known[n * n_workers + node]
    if known[level * n_workers + node]:
        return 1
    step = 1 << level
    own = _resolve(known, n_workers, n, node, level + 1)
    mate = _resolve(known, n_workers, n, node ^ step, level + 1)
    if node & step:
        if own or mate:
            known[level * n_workers + node] = 1
            return 1
    elif own and mate:
        known[level * n_workers + node] = 1
        return 1
    return 0


cdef int _check_1d(unsigned char* known, const unsigned char* avail,
                   const unsigned char* frozen, int n_workers, int n) noexcept nogil:
    cdef int i, level, step, node
    cdef unsigned char* below
    cdef unsigned char* row
    memset(known, 0, (n + 1) * n_workers)
    for i in range(n_workers):
        if avail[i]:
            known[n * n_workers + i] = 1
        if frozen[i]:
            known[i] = 1
    for i in range(n_workers):
        if not _resolve(known, n_workers, n, i, 0):
            if not frozen[i]:
                return 0
        if i & 1:
            for level in range(1, n + 1):
                step = 1 << (level - 1)
                below = known + (level - 1) * n_workers
                row = known + level * n_workers
                for node in range(i + 1):
                    if row[node]:
                        continue
                    if node & step:
                        if below[node]:
                            row[node] = 1
                    elif below[node] and below[node | step]:
                        row[node] = 1
    return 1


cdef int _stages(int n) except -1:
    cdef int s = 0
    cdef int m = n
    while m > 1:
        m >>= 1
        s += 1
    if n < 1 or (1 << s) != n:
        raise ValueError(f"length must be a power of 2, got {n}")
    return s


def check_decodable_1d(const unsigned char[::1] avail, const unsigned char[::1] frozen):
    cdef int n_workers = avail.shape[0]
    if frozen.shape[0] != n_workers:
        raise ValueError("avail and frozen must have the same length")
    cdef int n = _stages(n_workers)
    cdef unsigned char* known = <unsigned char*> calloc((n + 1) * n_workers, 1)
    if known == NULL:
        raise MemoryError()
    try:
        return _check_1d(known, &avail[0], &frozen[0], n_workers, n) != 0
    finally:
        free(known)


def first_decodable_prefix_1d(const long long[::1] order, const unsigned char[::1] frozen,
                              int n_usable):
    cdef int n_workers = order.shape[0]
    cdef int n = _stages(n_workers)
    cdef int n_data = n_workers
    cdef int i, lo, hi, mid
    for i in range(n_workers):
        if frozen[i]:
            n_data -= 1
    cdef unsigned char* known = <unsigned char*> calloc((n + 1) * n_workers, 1)
    cdef unsigned char* avail = <unsigned char*> calloc(n_workers, 1)
    if known == NULL or avail == NULL:
        free(known)
        free(avail)
        raise MemoryError()
    try:
        lo = n_data
        hi = n_usable
        if hi < lo or not _probe_1d(known, avail, &order[0], &frozen[0], n_workers, n, hi):
            return -1
        while lo < hi:
            mid = (lo + hi) // 2
            if _probe_1d(known, avail, &order[0], &frozen[0], n_workers, n, mid):
                hi = mid
            else:
                lo = mid + 1
        return lo
    finally:
        free(known)
        free(avail)


cdef int _probe_1d(unsigned char* known, unsigned char* avail, const long long* order,
                   const unsigned char* frozen, int n_workers, int n, int k) noexcept nogil:
    cdef int j
    memset(avail, 0, n_workers)
    for j in range(k):
        avail[order[j]] = 1
    return _check_1d(known, avail, frozen, n_workers, n)


cdef int _check_2d(unsigned char* grid, unsigned char* scratch, unsigned char* line,
                   const unsigned char* frozen_rows, const unsigned char* frozen_cols,
                   int n1, int n2, int s1, int s2) noexcept nogil:
    cdef int i, j, all_known, progress, missing
    while True:
        all_known = 1
        progress = 0
        for i in range(n1):
            missing = 0
            for j in range(n2):
                if not grid[i * n2 + j]:
                    missing = 1
                    break
            if missing and _check_1d(scratch, grid + i * n2, frozen_cols, n2, s2):
                for j in range(n2):
                    grid[i * n2 + j] = 1
                progress = 1
                missing = 0
            if missing:
                all_known = 0
        for j in range(n2):
            missing = 0
            for i in range(n1):
                line[i] = grid[i * n2 + j]
                if not line[i]:
                    missing = 1
            if missing and _check_1d(scratch, line, frozen_rows, n1, s1):
                for i in range(n1):
                    grid[i * n2 + j] = 1
                progress = 1
        if all_known:
            return 1
        if not progress:
            return 0


def check_decodable_2d(const unsigned char[::1] known, int n1, int n2,
                       const unsigned char[::1] frozen_rows,
                       const unsigned char[::1] frozen_cols):
    if known.shape[0] != n1 * n2:
        raise ValueError("known must have length n1*n2")
    cdef int s1 = _stages(n1)
    cdef int s2 = _stages(n2)
    cdef int smax = s1 if s1 > s2 else s2
    cdef int nmax = n1 if n1 > n2 else n2
    cdef unsigned char* grid = <unsigned char*> calloc(n1 * n2, 1)
    cdef unsigned char* scratch = <unsigned char*> calloc((smax + 1) * nmax, 1)
    cdef unsigned char* line = <unsigned char*> calloc(nmax, 1)
    cdef int i
    if grid == NULL or scratch == NULL or line == NULL:
        free(grid)
        free(scratch)
        free(line)
        raise MemoryError()
    try:
        for i in range(n1 * n2):
            grid[i] = known[i]
        return _check_2d(grid, scratch, line, &frozen_rows[0], &frozen_cols[0],
                         n1, n2, s1, s2) != 0
    finally:
        free(grid)
        free(scratch)
        free(line)


def first_decodable_prefix_2d(const long long[::1] order, int n1, int n2,
                              const unsigned char[::1] frozen_rows,
                              const unsigned char[::1] frozen_cols, int n_usable):
    cdef int s1 = _stages(n1)
    cdef int s2 = _stages(n2)
    cdef int smax = s1 if s1 > s2 else s2
    cdef int nmax = n1 if n1 > n2 else n2
    cdef int d1 = n1, d2 = n2
    cdef int i, j, lo, hi, mid, ok
    for i in range(n1):
        if frozen_rows[i]:
            d1 -= 1
    for j in range(n2):
        if frozen_cols[j]:
            d2 -= 1
    cdef unsigned char* grid = <unsigned char*> calloc(n1 * n2, 1)
    cdef unsigned char* scratch = <unsigned char*> calloc((smax + 1) * nmax, 1)
    cdef unsigned char* line = <unsigned char*> calloc(nmax, 1)
    if grid == NULL or scratch == NULL or line == NULL:
        free(grid)
        free(scratch)
        free(line)
        raise MemoryError()
    try:
        lo = d1 * d2
        hi = n_usable
        if hi < lo:
            return -1
        memset(grid, 0, n1 * n2)
        for j in range(hi):
            grid[order[j]] = 1
        if not _check_2d(grid, scratch, line, &frozen_rows[0], &frozen_cols[0], n1, n2, s1, s2):
            return -1
        while lo < hi:
            mid = (lo + hi) // 2
            memset(grid, 0, n1 * n2)
            for j in range(mid):
                grid[order[j]] = 1
            ok = _check_2d(grid, scratch, line, &frozen_rows[0], &frozen_cols[0], n1, n2, s1, s2)
            if ok:
                hi = mid
            else:
                lo = mid + 1
        return lo
    finally:
        free(grid)
        free(scratch)
        free(line)
