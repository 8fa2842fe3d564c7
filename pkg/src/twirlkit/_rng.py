"""Deterministic, cross-platform random stream used by every stochastic operation.

The generator is SplitMix64 (Steele, Lea & Flood's mixing constants), chosen
because it is trivially portable, counter-friendly, and easy to reproduce in
both the numba and numpy execution backends with bit-identical output.

Seeding contract
----------------
Every trial ``t`` of a run with master seed ``s`` draws from an independent
stream seeded with ``trial_seed(s, t)``.  Streams are therefore independent of
evaluation order: trials can be generated in any order, in chunks, or in
parallel, and always produce the same values.

Draw conventions (shared by all backends, see ``_kernels_numpy`` /
``_kernels_numba``):

* ``next_u64``   -- advance state by GOLDEN, return mixed state.
* ``next_f64``   -- ``(next_u64 >> 11) * 2**-53``, uniform on [0, 1).
* integers below ``m`` -- ``int(next_f64() * m)``.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Derive the per-trial stream seed from the master seed and trial index."""
    return mix64((master_seed & MASK64) ^ mix64(((trial_index + 1) * GOLDEN) & MASK64))


class Stream:
    """Scalar SplitMix64 stream (reference implementation, used off the hot path)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_f64(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def next_below(self, bound: int) -> int:
        return int(self.next_f64() * bound)


def batch_seeds(master_seed: int, trial_indices: np.ndarray) -> np.ndarray:
    """Vectorized ``trial_seed`` for an array of trial indices (uint64)."""
    t = trial_indices.astype(np.uint64)
    z = (t + np.uint64(1)) * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    z ^= np.uint64(master_seed & MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def batch_next_u64(states: np.ndarray) -> np.ndarray:
    """Advance every stream state in place; return the drawn uint64 values."""
    states += np.uint64(GOLDEN)
    z = (states ^ (states >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def batch_next_f64(states: np.ndarray) -> np.ndarray:
    return (batch_next_u64(states) >> np.uint64(11)) * _INV_2_53
