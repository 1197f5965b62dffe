"""Code construction for the real-valued erasure setting.

Each of the N workers behaves as an erasure channel with probability
``epsilon`` (a straggling, crashed, or timed-out worker is an erasure).
One butterfly level transforms a pair of channels with erasure probability
p into a degraded channel with probability 1 - (1-p)^2 and an upgraded one
with probability p^2; applying log2(N) levels yields N synthesized channels
whose probabilities this module computes. The best ``n_data`` channels carry
data blocks, the rest are frozen to zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "CodeConstruction",
    "compute_channel_erasure_probs",
    "select_frozen_set",
    "build_construction",
    "construction_to_dict",
    "construction_from_dict",
]


def _require_power_of_two(n: int, what: str = "n_workers") -> int:
    n = int(n)
    if n < 2 or (n & (n - 1)) != 0:
        raise ValidationError(f"{what} must be a power of 2 and >= 2, got {n}")
    return n


def compute_channel_erasure_probs(n_workers: int, epsilon: float) -> np.ndarray:
    """Erasure probabilities of the N synthesized channels, in channel order.

    Parameters
    ----------
    n_workers : int
        Number of workers N; must be a power of 2, at least 2.
    epsilon : float
        Per-worker erasure probability, strictly inside (0, 1).

    Returns
    -------
    ndarray of shape (N,)
        ``probs[i]`` is the erasure probability of channel i. Index order
        matches the encoder's input order: for N=4 and epsilon=0.5 this is
        [0.9375, 0.5625, 0.4375, 0.0625].

    Notes
    -----
    One level maps p to the pair (1-(1-p)^2, p^2). Levels are applied
    coarsest-first, so channel i applies the degraded transform for every 0
    bit and the upgraded transform for every 1 bit of i, most significant
    bit first. The total probability mass is conserved: sum(probs) == N*epsilon.
    """
    n_workers = _require_power_of_two(n_workers)
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 1.0):
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon}")
    probs = np.array([epsilon], dtype=np.float64)
    while probs.size < n_workers:
        nxt = np.empty(2 * probs.size, dtype=np.float64)
        nxt[0::2] = 1.0 - (1.0 - probs) ** 2
        nxt[1::2] = probs * probs
        probs = nxt
    return probs


@dataclass(frozen=True)
class CodeConstruction:
    """Frozen/data channel layout for one code of N workers.

    Invariants (checked at construction time):

    * ``frozen_set`` and ``data_set`` partition range(N) and are sorted;
    * every data channel has erasure probability at most that of every
      frozen channel;
    * channel probabilities sum to ``N * epsilon``.
    """

    n_workers: int
    epsilon: float
    channel_probs: tuple
    frozen_set: tuple
    data_set: tuple
    n_data: int
    # derived masks, cached for the hot simulation paths
    frozen_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = _require_power_of_two(self.n_workers)
        if len(self.channel_probs) != n:
            raise ValidationError("channel_probs length must equal n_workers")
        probs = np.asarray(self.channel_probs, dtype=np.float64)
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValidationError("channel probabilities must lie in [0, 1]")
        if not (0 < self.n_data < n):
            raise ValidationError(
                f"n_data must satisfy 0 < n_data < n_workers, got {self.n_data}"
            )
        frozen = tuple(sorted(int(i) for i in self.frozen_set))
        data = tuple(sorted(int(i) for i in self.data_set))
        if len(data) != self.n_data:
            raise ValidationError("data_set size must equal n_data")
        if sorted(frozen + data) != list(range(n)):
            raise ValidationError("frozen_set and data_set must partition range(N)")
        if max(probs[list(data)]) > min(probs[list(frozen)]) + 1e-12:
            raise ValidationError("a data channel is worse than a frozen channel")
        total = float(probs.sum())
        if abs(total - n * self.epsilon) > 1e-9 * max(1.0, n * self.epsilon):
            raise ValidationError(
                f"channel probabilities sum to {total}, expected N*epsilon = {n * self.epsilon}"
            )
        object.__setattr__(self, "frozen_set", frozen)
        object.__setattr__(self, "data_set", data)
        object.__setattr__(self, "channel_probs", tuple(float(p) for p in probs))
        mask = np.zeros(n, dtype=np.uint8)
        mask[list(frozen)] = 1
        mask.setflags(write=False)
        object.__setattr__(self, "frozen_mask", mask)

    @property
    def n_stages(self) -> int:
        return self.n_workers.bit_length() - 1

    def is_frozen(self, channel: int) -> bool:
        return bool(self.frozen_mask[channel])


def select_frozen_set(channel_probs, n_data: int) -> CodeConstruction:
    """Pick the ``n_data`` most reliable channels as data, freeze the rest.

    Ties in erasure probability are broken by freezing the lower index, so
    constructions are deterministic and reproducible.
    """
    probs = np.asarray(channel_probs, dtype=np.float64)
    n = _require_power_of_two(probs.size, "len(channel_probs)")
    if not (0 < n_data < n):
        raise ValidationError(f"n_data must satisfy 0 < n_data < {n}, got {n_data}")
    # sort by probability, preferring higher indices for the data side on ties
    order = sorted(range(n), key=lambda i: (probs[i], -i))
    data = sorted(order[:n_data])
    frozen = sorted(order[n_data:])
    epsilon = float(probs.sum()) / n
    return CodeConstruction(
        n_workers=n,
        epsilon=epsilon,
        channel_probs=tuple(probs),
        frozen_set=tuple(frozen),
        data_set=tuple(data),
        n_data=int(n_data),
    )


def build_construction(n_workers: int, epsilon: float, n_data: int | None = None) -> CodeConstruction:
    """Convenience wrapper: compute channel probabilities and select channels.

    When ``n_data`` is omitted it defaults to round(N * (1 - epsilon));
    a rate yielding 0 or N data channels is rejected.
    """
    probs = compute_channel_erasure_probs(n_workers, epsilon)
    if n_data is None:
        n_data = int(round(n_workers * (1.0 - epsilon)))
        if n_data <= 0 or n_data >= n_workers:
            raise ValidationError(
                f"rate 1-epsilon={1 - epsilon} leaves {n_data} data channels; "
                "pass n_data explicitly"
            )
    return select_frozen_set(probs, n_data)


def construction_to_dict(c: CodeConstruction) -> dict:
    return {
        "n_workers": c.n_workers,
        "epsilon": c.epsilon,
        "n_data": c.n_data,
        "frozen_set": list(c.frozen_set),
        "channel_probs": list(c.channel_probs),
    }


def construction_from_dict(doc: dict) -> CodeConstruction:
    try:
        n = int(doc["n_workers"])
        frozen = sorted(int(i) for i in doc["frozen_set"])
        probs = [float(p) for p in doc["channel_probs"]]
        n_data = int(doc["n_data"])
        epsilon = float(doc["epsilon"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed construction document: {exc}") from exc
    data = sorted(set(range(n)) - set(frozen))
    return CodeConstruction(
        n_workers=n,
        epsilon=epsilon,
        channel_probs=tuple(probs),
        frozen_set=tuple(frozen),
        data_set=tuple(data),
        n_data=n_data,
    )


def save_construction(path, c: CodeConstruction) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(construction_to_dict(c), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_construction(path) -> CodeConstruction:
    with open(path, "r", encoding="utf-8") as fh:
        return construction_from_dict(json.load(fh))
