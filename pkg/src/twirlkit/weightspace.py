"""Exact combinatorics of the (n+1)-dimensional error-weight representation.

A fully symmetrised n-qubit Pauli channel is described equally well by two
length-(n+1) vectors:

* ``p`` -- total probability of weight-w errors,
* ``c`` -- eigenvalue by which the channel scales any weight-w Z-type
  observable (equivalently ``2q_w - 1`` for the even-parity probability q_w).

``omega(n)`` is the exact rational change of basis with ``c = omega @ p`` and
``p = omega_inv @ c``.  All entries are computed as ``fractions.Fraction``;
floats appear only when callers ask for them.  The sample-size helpers and
the uncertainty bounds for inverting noisy ``c`` estimates live here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, log

import numpy as np

__all__ = [
    "OmegaMatrix",
    "HammingMatrix",
    "omega",
    "omega_inv",
    "hamming_matrix",
    "recover_p_from_hamming",
    "chernoff_sample_size",
    "union_bound_sample_size",
    "uncertainty_bounds",
]

# Rational lower bound on Euler's number, tight to 5e-10.  Using a lower bound
# keeps the loose-bound comparison conservative while staying in exact
# arithmetic.
_E_LO = Fraction(2718281828, 10**9)


@dataclass(frozen=True)
class OmegaMatrix:
    """Exact (n+1)x(n+1) change of basis between weight probabilities and eigenvalues."""

    n: int
    entries: tuple[tuple[Fraction, ...], ...]
    direction: str  # "p_to_c" or "c_to_p"

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def row(self, m: int) -> tuple[Fraction, ...]:
        return self.entries[m]

    def __matmul__(self, vec):
        a = self.as_array()
        return a @ np.asarray(vec, dtype=float)


@dataclass(frozen=True)
class HammingMatrix:
    """Upper-triangular map from weight probabilities to outcome Hamming-weight
    probabilities: entry (h, w) is C(w,h) 2^h / 3^w."""

    n: int
    entries: tuple[tuple[Fraction, ...], ...]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])


def _omega_entry(n: int, m: int, w: int) -> Fraction:
    total = Fraction(-1)
    for ell in range(max(0, w + m - n), min(m, w) + 1):
        total += (
            Fraction(comb(n - m, w - ell) * comb(m, ell), comb(n, w))
            * Fraction(3**ell + (-1) ** ell, 3**ell)
        )
    return total


@lru_cache(maxsize=64)
def omega(n: int) -> OmegaMatrix:
    """Exact matrix taking weight probabilities to observable eigenvalues."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = tuple(
        tuple(_omega_entry(n, m, w) for w in range(n + 1)) for m in range(n + 1)
    )
    return OmegaMatrix(n, rows, "p_to_c")


@lru_cache(maxsize=64)
def omega_inv(n: int) -> OmegaMatrix:
    """Exact inverse of ``omega(n)``: entry (m, w) is 3^(m+w) C(n,m) C(n,w) / 4^n
    times the forward entry."""
    fwd = omega(n)
    rows = tuple(
        tuple(
            Fraction(3 ** (m + w) * comb(n, m) * comb(n, w), 4**n) * fwd.entries[m][w]
            for w in range(n + 1)
        )
        for m in range(n + 1)
    )
    return OmegaMatrix(n, rows, "c_to_p")


@lru_cache(maxsize=64)
def hamming_matrix(n: int) -> HammingMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = tuple(
        tuple(
            Fraction(comb(w, h) * 2**h, 3**w) if h <= w else Fraction(0)
            for w in range(n + 1)
        )
        for h in range(n + 1)
    )
    return HammingMatrix(n, rows)


def recover_p_from_hamming(u) -> tuple[np.ndarray, list[int]]:
    """Solve ``R p = u`` by back-substitution from the highest weight down.

    The diagonal is 2^w/3^w > 0, so the system is always solvable.  Returns
    the recovered vector and the (possibly empty) list of weights where the
    estimate came out negative, flagged rather than clipped.
    """
    u = np.asarray(u, dtype=float)
    n = len(u) - 1
    r = hamming_matrix(n).as_array()
    p = np.zeros(n + 1)
    for w in range(n, -1, -1):
        p[w] = (u[w] - r[w, w + 1:] @ p[w + 1:]) / r[w, w]
    nonphysical = [w for w in range(n + 1) if p[w] < 0]
    return p, nonphysical


def _rounded_trials(x: float) -> int:
    # Nearest integer, never below 1; the exponential tail bound is continuous
    # in K, so quantizing by less than half a trial is immaterial.
    return max(1, int(x + 0.5))


def chernoff_sample_size(delta: float, epsilon: float) -> int:
    """Trials needed so one empirical mean is within ``delta`` of its
    expectation except with probability ``epsilon`` (two-sided exponential
    tail bound)."""
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    return _rounded_trials(log(2.0 / epsilon) / delta**2)


def union_bound_sample_size(n: int, delta: float, epsilon: float) -> int:
    """Trials needed for all n+1 eigenvalue estimates simultaneously."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    return _rounded_trials(log(2.0 * (n + 1) / epsilon) / delta**2)


def uncertainty_bounds(n: int, w: int, sigma: float) -> dict[str, float]:
    """Worst-case standard deviation of the weight-w probability estimate when
    every eigenvalue estimate has standard deviation ``sigma``.

    Returns three nested bounds:

    * ``tight``  -- sigma times the exact row absolute sum of the inverse map,
    * ``simple`` -- sigma * 3^w * C(n, w),
    * ``loose``  -- sigma * (3 e n / w)^w  (defined as sigma at w = 0).
    """
    if not 0 <= w <= n:
        raise ValueError("w must be in [0, n]")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    factors = exact_worst_case_factors(n)
    tight = sigma * float(factors[w])
    simple = sigma * (3**w) * comb(n, w)
    loose = sigma if w == 0 else sigma * float((3 * _E_LO * n / w) ** w)
    return {"tight": tight, "simple": simple, "loose": loose}


@lru_cache(maxsize=64)
def exact_worst_case_factors(n: int) -> tuple[Fraction, ...]:
    """Row absolute sums of the inverse map, as exact rationals."""
    inv = omega_inv(n)
    return tuple(sum(abs(x) for x in row) for row in inv.entries)


def bound_chain_holds(n: int) -> bool:
    """Exact-rational check that tight <= simple <= loose for every w."""
    factors = exact_worst_case_factors(n)
    for w in range(n + 1):
        simple = Fraction(3**w * comb(n, w))
        loose = Fraction(1) if w == 0 else (Fraction(3) * _E_LO * n / w) ** w
        if factors[w] > simple or simple > loose:
            return False
    return True
