"""Straggler-resilient coded matrix multiplication over a real-valued
erasure channel, with MDS and LT baselines and a simulation harness.

The coding core treats each distributed worker as an erasure channel (a
straggler's output is simply missing), synthesizes polarized channels from
pairs recursively, freezes the unreliable ones, and decodes any accepted
subset of worker outputs exactly -- using only block additions and
subtractions in float64.
"""

from .blocks import OpCounter, PartitionedMatrix
from .coding import check_decodability, decode, decode_recursive, encode, generator_matrix
from .construction import (
    CodeConstruction,
    build_construction,
    compute_channel_erasure_probs,
    select_frozen_set,
)
from .errors import (
    ConditioningError,
    DivergenceError,
    FetchError,
    UndecodablePatternError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "CodeConstruction",
    "OpCounter",
    "PartitionedMatrix",
    "build_construction",
    "check_decodability",
    "compute_channel_erasure_probs",
    "decode",
    "decode_recursive",
    "encode",
    "generator_matrix",
    "select_frozen_set",
    "ConditioningError",
    "DivergenceError",
    "FetchError",
    "UndecodablePatternError",
    "ValidationError",
    "__version__",
]
