"""Numba implementations of the hot trial-simulation kernels.

Bit-identical twins of ``_kernels_numpy``: same per-trial streams, same draw
order, same outputs.  Kept to scalar loops so the JIT can keep everything in
registers; compiled lazily and cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(uint64(uint64), cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _next_f64(state):
    state = state + _GOLDEN
    return state, (_mix(state) >> np.uint64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def _pick_term(cdf, f):
    lo, hi = 0, len(cdf)
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] <= f:
            lo = mid + 1
        else:
            hi = mid
    if lo >= len(cdf):
        lo = len(cdf) - 1
    return lo


@njit(cache=True)
def run_standard_pauli(seeds, n, conj_code, inv, term_codes, cdf, prep, meas, use_spam):
    k = len(seeds)
    ids = np.empty((k, n), dtype=np.uint8)
    bits = np.empty((k, n), dtype=np.uint8)
    for t in range(k):
        state = seeds[t]
        for j in range(n):
            state, f = _next_f64(state)
            ids[t, j] = np.uint8(f * 24.0)
        if use_spam:
            for j in range(n):
                state, f = _next_f64(state)
                bits[t, j] = np.uint8(1) if f < prep[j] else np.uint8(0)
        else:
            for j in range(n):
                bits[t, j] = 0
        state, f = _next_f64(state)
        idx = _pick_term(cdf, f)
        for j in range(n):
            code = term_codes[idx, j]
            out = conj_code[inv[ids[t, j]], code]
            bits[t, j] ^= out & np.uint8(1)
        if use_spam:
            for j in range(n):
                state, f = _next_f64(state)
                if f < meas[j]:
                    bits[t, j] ^= np.uint8(1)
    return ids, bits


@njit(cache=True)
def run_ensemble_pauli(seeds, n, w_prime, conj_code, term_codes, cdf, prep, meas, use_spam):
    k = len(seeds)
    ids = np.empty((k, n), dtype=np.uint8)
    perm = np.empty((k, n), dtype=np.int64)
    signs = np.empty(k, dtype=np.int8)
    for t in range(k):
        state = seeds[t]
        for j in range(n):
            state, f = _next_f64(state)
            ids[t, j] = np.uint8(f * 24.0)
        for j in range(n):
            perm[t, j] = j
        for i in range(n - 1, 0, -1):
            state, f = _next_f64(state)
            j = np.int64(f * (i + 1))
            tmp = perm[t, i]
            perm[t, i] = perm[t, j]
            perm[t, j] = tmp
        spam_sign = np.int8(1)
        if use_spam:
            for j in range(n):
                state, f = _next_f64(state)
                if f < prep[j] and j < w_prime:
                    spam_sign = -spam_sign
        state, f = _next_f64(state)
        idx = _pick_term(cdf, f)
        if use_spam:
            for j in range(n):
                state, f = _next_f64(state)
                if f < meas[j] and j < w_prime:
                    spam_sign = -spam_sign

        parity = 0
        for j in range(n):
            obs = np.uint8(0)
            for s in range(w_prime):
                if perm[t, s] == j:
                    obs = np.uint8(2)
                    break
            if obs != 0:
                obs_out = conj_code[ids[t, j], obs]
                err = term_codes[idx, j]
                parity ^= ((err & np.uint8(1)) & (obs_out >> np.uint8(1))) ^ (
                    ((err >> np.uint8(1)) & np.uint8(1)) & (obs_out & np.uint8(1))
                )
        signs[t] = (np.int8(-1) if parity else np.int8(1)) * spam_sign
    return ids, perm, signs
