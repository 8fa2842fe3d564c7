"""Vectorized numpy implementations of the hot trial-simulation kernels.

These are the fallback twins of the numba kernels in ``_kernels_numba``; both
consume the same per-trial SplitMix64 streams in the same draw order and must
produce bit-identical outputs.  The draw order per trial is:

1. n Clifford element ids,
2. (ensemble only) a Fisher-Yates shuffle, n-1 draws,
3. (when a SPAM model is present) n preparation-flip draws,
4. one channel-sampling draw,
5. (when a SPAM model is present) n measurement-flip draws.
"""

from __future__ import annotations

import numpy as np

from ._rng import batch_next_f64


def run_standard_pauli(seeds, n, conj_code, inv, term_codes, cdf, prep, meas, use_spam):
    k = len(seeds)
    states = seeds.copy()
    ids = np.empty((k, n), dtype=np.uint8)
    for j in range(n):
        ids[:, j] = (batch_next_f64(states) * 24.0).astype(np.uint8)

    if use_spam:
        prep_flips = np.empty((k, n), dtype=np.uint8)
        for j in range(n):
            prep_flips[:, j] = batch_next_f64(states) < prep[j]

    idx = np.searchsorted(cdf, batch_next_f64(states), side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)

    if use_spam:
        meas_flips = np.empty((k, n), dtype=np.uint8)
        for j in range(n):
            meas_flips[:, j] = batch_next_f64(states) < meas[j]

    # Effective error in the measurement frame is the inverse-layer conjugate
    # of the sampled term; a bit flips where it has an X component.
    bits = conj_code[inv[ids], term_codes[idx]] & np.uint8(1)
    if use_spam:
        bits ^= prep_flips
        bits ^= meas_flips
    return ids, bits


def run_ensemble_pauli(seeds, n, w_prime, conj_code, term_codes, cdf, prep, meas, use_spam):
    k = len(seeds)
    states = seeds.copy()
    ids = np.empty((k, n), dtype=np.uint8)
    for j in range(n):
        ids[:, j] = (batch_next_f64(states) * 24.0).astype(np.uint8)

    perm = np.tile(np.arange(n, dtype=np.int64), (k, 1))
    rows = np.arange(k)
    for i in range(n - 1, 0, -1):
        j = (batch_next_f64(states) * (i + 1)).astype(np.int64)
        left = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = left

    spam_sign = np.ones(k, dtype=np.int8)
    if use_spam:
        for j in range(n):
            flips = batch_next_f64(states) < prep[j]
            if j < w_prime:
                spam_sign[flips] = -spam_sign[flips]

    idx = np.searchsorted(cdf, batch_next_f64(states), side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)

    if use_spam:
        for j in range(n):
            flips = batch_next_f64(states) < meas[j]
            if j < w_prime:
                spam_sign[flips] = -spam_sign[flips]

    # Observable: Z on the permuted images of sites 0..w'-1, conjugated
    # forward through the layer; outcome is its commutation sign with the
    # sampled error.
    obs_code = np.zeros((k, n), dtype=np.uint8)
    dest = perm[:, :w_prime]
    obs_code[rows[:, None], dest] = 2
    obs_out = conj_code[ids, obs_code]
    err = term_codes[idx]
    form = ((err & 1) & (obs_out >> 1)) ^ (((err >> 1) & 1) & (obs_out & 1))
    parity = form.sum(axis=1, dtype=np.int64) & 1
    signs = np.where(parity, np.int8(-1), np.int8(1)) * spam_sign
    return ids, perm, signs
