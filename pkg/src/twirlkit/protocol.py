"""Monte Carlo simulation of the twirled-characterisation protocol.

Two protocol variants are simulated:

* **standard** -- prepare the all-zero state, conjugate the channel by a
  random single-qubit Clifford layer, measure every qubit.  One trial yields
  an n-bit outcome string.
* **ensemble** -- input is the Z-type observable on the first w' sites, the
  channel is conjugated by a random qubit permutation and a Clifford layer,
  and one trial yields a single +-1 expectation sample whose mean estimates
  the weight-w' eigenvalue.

For Pauli channels the simulation never touches state vectors: the trial is
resolved by sampling one error term and tracking its bit-packed conjugation
("Pauli frame"), which makes large qubit counts cheap.  Kraus channels (dense,
n <= 6) are evolved explicitly and Born sampled; statistics agree with the
Pauli-frame route, which the test suite verifies.

Determinism
-----------
Every trial ``t`` draws from its own SplitMix64 stream seeded with
``trial_seed(master_seed, t)``; outputs are independent of execution order,
chunking, backend, and thread count.  The per-trial draw order is fixed:

1. n Clifford ids, site 0 first,
2. ensemble only: Fisher-Yates permutation, n-1 draws,
3. when a SPAM model is configured: n preparation-flip draws,
4. one channel draw (error term for Pauli channels, Born sample for Kraus),
5. when a SPAM model is configured: n measurement-flip draws.

SPAM is modelled as independent classical bit flips at preparation and
readout.  Flip draws are consumed for every qubit whenever a SPAM model is
present (even at probability zero) so that configurations with and without a
SPAM model are the only two stream layouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from . import backend as _backend
from ._rng import batch_next_f64, batch_seeds
from .channels import KrausChannel, PauliChannel
from .pauli import QubitPermutation, clifford_tables

DENSE_CHUNK = 4096


@dataclass(frozen=True)
class SpamModel:
    """Independent per-qubit classical flip probabilities at prep and readout."""

    prep: np.ndarray
    meas: np.ndarray

    def __post_init__(self):
        prep = np.atleast_1d(np.asarray(self.prep, dtype=float))
        meas = np.atleast_1d(np.asarray(self.meas, dtype=float))
        if prep.shape != meas.shape:
            raise ValueError("prep and meas must have the same length")
        if np.any(prep < 0) or np.any(prep >= 0.5) or np.any(meas < 0) or np.any(meas >= 0.5):
            raise ValueError("flip probabilities must lie in [0, 0.5)")
        object.__setattr__(self, "prep", prep)
        object.__setattr__(self, "meas", meas)

    @classmethod
    def uniform(cls, n: int, prep: float, meas: float) -> "SpamModel":
        return cls(np.full(n, prep), np.full(n, meas))


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    channel: PauliChannel | KrausChannel
    variant: Literal["standard", "ensemble"] = "standard"
    trials: int = 1
    master_seed: int = 0
    spam_model: SpamModel | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.channel.n != self.n:
            raise ValueError("channel qubit count does not match n")
        if self.variant not in ("standard", "ensemble"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.spam_model is not None and len(self.spam_model.prep) != self.n:
            raise ValueError("SPAM model length does not match n")


@dataclass(frozen=True)
class TrialRecord:
    """One protocol shot, as stored in trial files."""

    trial_index: int
    clifford_ids: tuple[int, ...]
    permutation: QubitPermutation | None
    input_kind: str | tuple[str, int]  # "zero_state" or ("z_weight", w')
    outcome: str | int  # bit string (standard) or +-1 (ensemble)
    is_reference: bool


@dataclass(frozen=True)
class TrialSet:
    """Column-oriented batch of trials; iterate ``records()`` for row form."""

    n: int
    variant: str
    master_seed: int
    trial_indices: np.ndarray
    clifford_ids: np.ndarray  # (K, n) uint8
    outcomes: np.ndarray  # (K, n) bits for standard, (K,) +-1 for ensemble
    permutations: np.ndarray | None = None  # (K, n) for ensemble
    z_weight: int | None = None
    is_reference: bool = False
    spam_model: SpamModel | None = field(default=None, compare=False)

    @property
    def trials(self) -> int:
        return len(self.trial_indices)

    def records(self) -> Iterator[TrialRecord]:
        for i in range(self.trials):
            if self.variant == "standard":
                kind: str | tuple[str, int] = "zero_state"
                outcome: str | int = "".join(
                    "1" if b else "0" for b in self.outcomes[i]
                )
                perm = None
            else:
                kind = ("z_weight", int(self.z_weight))
                outcome = int(self.outcomes[i])
                perm = QubitPermutation(tuple(int(v) for v in self.permutations[i]))
            yield TrialRecord(
                trial_index=int(self.trial_indices[i]),
                clifford_ids=tuple(int(v) for v in self.clifford_ids[i]),
                permutation=perm,
                input_kind=kind,
                outcome=outcome,
                is_reference=self.is_reference,
            )


def _channel_arrays(ch: PauliChannel) -> tuple[np.ndarray, np.ndarray]:
    """Stable (term_codes, cdf) arrays for kernel-side inverse-CDF sampling."""
    keys = sorted(ch.terms)
    codes = np.zeros((len(keys), ch.n), dtype=np.uint8)
    probs = np.zeros(len(keys))
    for i, (x, z) in enumerate(keys):
        probs[i] = ch.terms[(x, z)]
        for j in range(ch.n):
            codes[i, j] = ((x >> j) & 1) | (((z >> j) & 1) << 1)
    cdf = np.cumsum(probs)
    cdf[-1] = max(cdf[-1], 1.0)
    return codes, cdf


def _spam_arrays(cfg: ProtocolConfig) -> tuple[np.ndarray, np.ndarray, bool]:
    if cfg.spam_model is None:
        return np.zeros(cfg.n), np.zeros(cfg.n), False
    return cfg.spam_model.prep, cfg.spam_model.meas, True


def _simulate_standard_pauli(
    cfg: ProtocolConfig, ch: PauliChannel, indices: np.ndarray, backend_name: str | None
) -> tuple[np.ndarray, np.ndarray]:
    kern = _backend.get_backend(backend_name)
    conj_code, _, _, inv = clifford_tables()
    term_codes, cdf = _channel_arrays(ch)
    prep, meas, use_spam = _spam_arrays(cfg)
    seeds = batch_seeds(cfg.master_seed, indices)
    return kern.run_standard_pauli(
        seeds, cfg.n, conj_code, inv, term_codes, cdf, prep, meas, use_spam
    )


def _simulate_standard_kraus(
    cfg: ProtocolConfig, ch: KrausChannel, indices: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    from .pauli import _tables

    n, k = cfg.n, len(indices)
    dim = 2**n
    unit = _tables().unitaries
    ops = np.stack(ch.operators)
    prep, meas, use_spam = _spam_arrays(cfg)

    ids = np.empty((k, n), dtype=np.uint8)
    bits = np.empty((k, n), dtype=np.uint8)
    for lo in range(0, k, DENSE_CHUNK):
        hi = min(lo + DENSE_CHUNK, k)
        m = hi - lo
        states = batch_seeds(cfg.master_seed, indices[lo:hi])
        cids = np.empty((m, n), dtype=np.uint8)
        for j in range(n):
            cids[:, j] = (batch_next_f64(states) * 24.0).astype(np.uint8)
        ids[lo:hi] = cids

        if use_spam:
            input_idx = np.zeros(m, dtype=np.int64)
            for j in range(n):
                flips = batch_next_f64(states) < prep[j]
                input_idx |= flips.astype(np.int64) << j
        else:
            input_idx = np.zeros(m, dtype=np.int64)

        u = unit[cids[:, 0]]
        for j in range(1, n):
            b = unit[cids[:, j]]
            da = u.shape[1]
            u = np.einsum("mab,mcd->macbd", b, u).reshape(m, 2 * da, 2 * da)

        # State after the layer, from basis state |input_idx>.
        v = u[np.arange(m), :, input_idx]
        probs = np.zeros((m, dim))
        ud = u.conj().transpose(0, 2, 1)
        for a in ops:
            w = v @ a.T
            y = np.einsum("mij,mj->mi", ud, w)
            probs += np.abs(y) ** 2
        probs /= probs.sum(axis=1, keepdims=True)

        born = batch_next_f64(states)
        cum = np.cumsum(probs, axis=1)
        outcome_idx = (cum <= born[:, None]).sum(axis=1)
        np.minimum(outcome_idx, dim - 1, out=outcome_idx)

        chunk_bits = (outcome_idx[:, None] >> np.arange(n)) & 1
        if use_spam:
            for j in range(n):
                flips = batch_next_f64(states) < meas[j]
                chunk_bits[:, j] ^= flips
        bits[lo:hi] = chunk_bits.astype(np.uint8)
    return ids, bits


def simulate_standard(cfg: ProtocolConfig, backend: str | None = None) -> TrialSet:
    """Run the standard protocol; returns one bit-string outcome per trial."""
    if cfg.variant != "standard":
        raise ValueError("config variant is not 'standard'")
    indices = np.arange(cfg.trials, dtype=np.uint64)
    if isinstance(cfg.channel, PauliChannel):
        ids, bits = _simulate_standard_pauli(cfg, cfg.channel, indices, backend)
    else:
        ids, bits = _simulate_standard_kraus(cfg, cfg.channel, indices)
    return TrialSet(
        n=cfg.n,
        variant="standard",
        master_seed=cfg.master_seed,
        trial_indices=indices,
        clifford_ids=ids,
        outcomes=bits,
        spam_model=cfg.spam_model,
    )


def simulate_ensemble(
    cfg: ProtocolConfig, w_prime: int, backend: str | None = None
) -> TrialSet:
    """Run the ensemble protocol for one input weight w'.

    Trial indices are offset by ``(w_prime - 1) * trials`` so the n input
    configurations of a full ensemble run draw disjoint streams.
    """
    if not 1 <= w_prime <= cfg.n:
        raise ValueError(f"w' must be in [1, {cfg.n}]")
    if not isinstance(cfg.channel, PauliChannel):
        raise ValueError("ensemble simulation requires a Pauli channel")
    kern = _backend.get_backend(backend)
    conj_code, _, _, _ = clifford_tables()
    term_codes, cdf = _channel_arrays(cfg.channel)
    prep, meas, use_spam = _spam_arrays(cfg)
    indices = np.arange(cfg.trials, dtype=np.uint64) + np.uint64(
        (w_prime - 1) * cfg.trials
    )
    seeds = batch_seeds(cfg.master_seed, indices)
    ids, perms, signs = kern.run_ensemble_pauli(
        seeds, cfg.n, w_prime, conj_code, term_codes, cdf, prep, meas, use_spam
    )
    return TrialSet(
        n=cfg.n,
        variant="ensemble",
        master_seed=cfg.master_seed,
        trial_indices=indices,
        clifford_ids=ids,
        outcomes=signs,
        permutations=perms,
        z_weight=w_prime,
        spam_model=cfg.spam_model,
    )


def reference_run(
    cfg: ProtocolConfig, w_prime: int | None = None, backend: str | None = None
) -> TrialSet:
    """Same pipeline with the noise channel replaced by the identity.

    The SPAM model still applies, so reference outcomes expose exactly the
    preparation and readout imperfections that normalisation divides out.
    """
    ident = PauliChannel.identity(cfg.n)
    ref_cfg = ProtocolConfig(
        n=cfg.n,
        channel=ident,
        variant=cfg.variant,
        trials=cfg.trials,
        master_seed=cfg.master_seed,
        spam_model=cfg.spam_model,
    )
    if cfg.variant == "standard":
        out = simulate_standard(ref_cfg, backend=backend)
    else:
        if w_prime is None:
            raise ValueError("ensemble reference needs w_prime")
        out = simulate_ensemble(ref_cfg, w_prime, backend=backend)
    return TrialSet(
        n=out.n,
        variant=out.variant,
        master_seed=out.master_seed,
        trial_indices=out.trial_indices,
        clifford_ids=out.clifford_ids,
        outcomes=out.outcomes,
        permutations=out.permutations,
        z_weight=out.z_weight,
        is_reference=True,
        spam_model=out.spam_model,
    )
