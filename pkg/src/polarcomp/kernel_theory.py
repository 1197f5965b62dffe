"""Which 2x2 kernels polarize worker run times, and what encoding costs.

A kernel K is polarizing when the first transformed input is recoverable
exactly at max(T1, T2) (needs both outputs) and the second, given the first,
at min(T1, T2) (either single output suffices). Algebraically that is:
both entries of the second column nonzero, and K invertible. The canonical
kernel [[1, 1], [0, 1]] attains the minimum encoding cost: one addition and
no multiplications.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

__all__ = ["is_polarizing", "encode_cost", "check_polarizing_by_simulation", "F2"]

ZERO_TOL = 1e-12

F2 = np.array([[1.0, 1.0], [0.0, 1.0]])


def _as_kernel(kernel) -> np.ndarray:
    k = np.asarray(kernel, dtype=np.float64)
    if k.shape != (2, 2):
        raise ValidationError(f"kernel must be 2x2, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValidationError("kernel entries must be finite")
    return k


def is_polarizing(kernel) -> bool:
    """True iff K12 != 0, K22 != 0 and det(K) != 0 (within a 1e-12 tolerance)."""
    k = _as_kernel(kernel)
    if abs(k[0, 1]) < ZERO_TOL or abs(k[1, 1]) < ZERO_TOL:
        return False
    det = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    return bool(abs(det) >= ZERO_TOL)


def encode_cost(kernel) -> tuple:
    """(additions, multiplications) of computing v = K u.

    Additions: nonzero entries per row, summed, minus the rows that have any
    nonzero entry. Multiplications: nonzero entries not equal to +-1.
    """
    k = _as_kernel(kernel)
    if not is_polarizing(k):
        raise ValidationError("encode_cost is defined for polarizing kernels only")
    nonzero = np.abs(k) >= ZERO_TOL
    additions = int(sum(max(int(row.sum()) - 1, 0) for row in nonzero))
    multiplications = int(np.sum(nonzero & (np.abs(np.abs(k) - 1.0) >= ZERO_TOL)))
    return additions, multiplications


def check_polarizing_by_simulation(kernel, trials: int, seed: int = 0) -> bool:
    """Monte Carlo witness of the run-time definition of a polarizing kernel.

    Per trial: draw u, compute v = K u, draw run times (T1, T2), and check
    that (a) u1 is recoverable from both outputs but from neither alone, and
    (b) u2, given u1, is recoverable from whichever output arrives first.
    Returns True iff every trial succeeds.
    """
    k = _as_kernel(kernel)
    rng = np.random.default_rng(seed)
    for _ in range(int(trials)):
        u = rng.normal(size=2)
        v = k @ u
        times = rng.random(2)
        first = int(np.argmin(times))
        # u1 must come from both outputs together...
        try:
            u_hat = np.linalg.solve(k, v)
        except np.linalg.LinAlgError:
            return False
        if abs(u_hat[0] - u[0]) > 1e-6 * max(1.0, abs(u[0])):
            return False
        # ...and from neither output alone
        for row in k:
            if abs(row[1]) < ZERO_TOL and abs(row[0]) >= ZERO_TOL:
                return False
        # u2, given u1, from the earliest single output
        row = k[first]
        if abs(row[1]) < ZERO_TOL:
            return False
        u2_hat = (v[first] - row[0] * u[0]) / row[1]
        if abs(u2_hat - u[1]) > 1e-6 * max(1.0, abs(u[1])):
            return False
    return True
