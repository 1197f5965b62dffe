"""Worker run-time modeling and CDF polarization.

The same pairing that polarizes erasure probabilities polarizes run times:
one level maps a completion-time CDF F to the slow channel F^2 (wait for
max(T1, T2)) and the fast channel 2F - F^2 (wait for min(T1, T2)). Applied
log2(n) times along the code's wiring this yields n transformed CDFs in
channel order; freezing a channel corresponds to not using a slow one.

The default straggler model is a shifted exponential (shift 1.0 s, rate
2.0 1/s) standing in for measured serverless traces; empirical sample files
are also accepted via :func:`model_from_config`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "EmpiricalCdf",
    "ShiftedExponential",
    "TransformedCdf",
    "polarize_cdf",
    "RuntimeModel",
    "default_model",
    "model_from_config",
    "model_to_config",
]


class EmpiricalCdf:
    """Step CDF of a finite sample; F(-inf)=0, F(inf)=1."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if s.size == 0:
            raise ValidationError("need at least one sample")
        if not np.all(np.isfinite(s)):
            raise ValidationError("samples must be finite")
        self.samples = s

    def evaluate(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.searchsorted(self.samples, t, side="right") / self.samples.size

    def median(self) -> float:
        return float(np.quantile(self.samples, 0.5))

    def sample(self, rng, size: int) -> np.ndarray:
        return rng.choice(self.samples, size=size, replace=True)

    def support(self) -> tuple:
        return float(self.samples[0]), float(self.samples[-1])


class ShiftedExponential:
    """Delay = shift + Exp(rate); the parametric stand-in base distribution."""

    def __init__(self, shift: float = 1.0, rate: float = 2.0):
        if shift < 0 or rate <= 0:
            raise ValidationError(f"need shift >= 0 and rate > 0, got {shift}, {rate}")
        self.shift = float(shift)
        self.rate = float(rate)

    def evaluate(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t < self.shift, 0.0, 1.0 - np.exp(-self.rate * (t - self.shift)))

    def median(self) -> float:
        return self.shift + math.log(2.0) / self.rate

    def sample(self, rng, size: int) -> np.ndarray:
        return self.shift + rng.exponential(1.0 / self.rate, size=size)

    def support(self) -> tuple:
        return self.shift, self.shift + 8.0 / self.rate


class TransformedCdf:
    """A base CDF composed with a sequence of slow (F^2) / fast (2F-F^2) maps."""

    def __init__(self, base, ops: tuple):
        self.base = base
        self.ops = tuple(ops)  # False = slow, True = fast

    def evaluate(self, t):
        f = np.asarray(self.base.evaluate(t), dtype=np.float64)
        for fast in self.ops:
            f = 2.0 * f - f * f if fast else f * f
        return f

    def median(self) -> float:  # bisect on the base support
        lo, hi = self.base.support()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.evaluate(mid)) < 0.5:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def polarize_cdf(base, n: int) -> list:
    """The n transformed run-time CDFs, in channel order.

    Channel i applies, for each bit of i from most to least significant, the
    slow map for a 0 bit and the fast map for a 1 bit -- mirroring the
    erasure-probability recursion (slow <-> degraded, fast <-> upgraded).
    """
    n = int(n)
    if n < 1 or (n & (n - 1)) != 0:
        raise ValidationError(f"n must be a power of 2, got {n}")
    if n == 1:
        return [base]
    stages = n.bit_length() - 1
    out = []
    for i in range(n):
        ops = tuple(bool((i >> (stages - 1 - b)) & 1) for b in range(stages))
        out.append(TransformedCdf(base, ops))
    return out


@dataclass
class RuntimeModel:
    """Finish-time sampler: base delay distribution + crashes + timeout."""

    delay: object = field(default_factory=ShiftedExponential)
    crash_probability: float = 0.0
    timeout: float = math.inf

    def __post_init__(self):
        if not (0.0 <= self.crash_probability < 1.0):
            raise ValidationError(
                f"crash_probability must be in [0, 1), got {self.crash_probability}"
            )
        if not self.timeout > 0:
            raise ValidationError(f"timeout must be positive, got {self.timeout}")

    def sample_finish_times(self, rng, n: int) -> np.ndarray:
        """Finish times for n workers; crashed or timed-out workers get +inf."""
        return self.sample_with_status(rng, n)[0]

    def sample_with_status(self, rng, n: int):
        """(finish times, statuses); statuses are done / crashed / timed_out.

        Crashed and timed-out workers are permanent erasures (never retried);
        their finish time is +inf.
        """
        times = self.delay.sample(rng, n).astype(np.float64)
        status = ["done"] * n
        if self.crash_probability > 0.0:
            crashed = rng.random(n) < self.crash_probability
            for i in np.flatnonzero(crashed):
                status[i] = "crashed"
            times[crashed] = math.inf
        for i in range(n):
            if status[i] == "done" and times[i] > self.timeout:
                status[i] = "timed_out"
                times[i] = math.inf
        return times, status


def default_model() -> RuntimeModel:
    return RuntimeModel()


def model_from_config(doc: dict, base_dir=None) -> RuntimeModel:
    """Build a model from the JSON config schema.

    Schema: {"distribution": "empirical"|"shifted_exp", "samples_file"?,
    "shift"?, "rate"?, "crash_probability"?, "timeout_s"?}.
    """
    kind = doc.get("distribution", "shifted_exp")
    if kind == "shifted_exp":
        delay = ShiftedExponential(doc.get("shift", 1.0), doc.get("rate", 2.0))
    elif kind == "empirical":
        path = doc.get("samples_file")
        if path is None:
            raise ValidationError("empirical distribution requires samples_file")
        if base_dir is not None:
            import os

            path = os.path.join(base_dir, path) if not os.path.isabs(path) else path
        delay = EmpiricalCdf(np.loadtxt(path, ndmin=1))
    else:
        raise ValidationError(f"unknown distribution {kind!r}")
    return RuntimeModel(
        delay=delay,
        crash_probability=float(doc.get("crash_probability", 0.0)),
        timeout=float(doc.get("timeout_s", math.inf)),
    )


def model_to_config(model: RuntimeModel) -> dict:
    if isinstance(model.delay, ShiftedExponential):
        doc = {"distribution": "shifted_exp", "shift": model.delay.shift, "rate": model.delay.rate}
    else:
        doc = {"distribution": "empirical"}
    doc["crash_probability"] = model.crash_probability
    if math.isfinite(model.timeout):
        doc["timeout_s"] = model.timeout
    return doc


def load_model(path) -> RuntimeModel:
    import os

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
