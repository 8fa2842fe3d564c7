"""Noise-channel representations and the engineered reference channels.

Two channel forms are supported:

* :class:`PauliChannel` -- sparse probability map over sign-stripped Pauli
  strings.  Scales to any qubit count as long as the term count stays bounded.
* :class:`KrausChannel` -- dense operator-sum form, capped at n <= 6 because
  exact verification needs D^2-sized dense algebra.

``pauli_decompose`` converts a Kraus channel into the Pauli channel its
Pauli-twirl produces; ``compose`` convolves two Pauli channels under
(sign-stripped) Pauli multiplication.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliString

PROB_SUM_TOL = 1e-12
TRACE_PRESERVING_TOL = 1e-10
COMPOSE_PRUNE_THRESHOLD = 1e-15
MAX_KRAUS_QUBITS = 6

FIXTURE_IDS = ("chcl3_z1z2_mix", "chcl3_zz", "chcl3_unitary", "malonic_z_mix")


@dataclass(frozen=True)
class WeightDistribution:
    """Per-weight error probabilities p_w, w = 0..n.

    Physical channels satisfy ``p >= 0`` and ``sum(p) == 1``; raw
    linear-inversion estimates may not, so violations are flagged instead of
    rejected (see :attr:`nonphysical_weights`).
    """

    n: int
    p: np.ndarray
    nonphysical_weights: tuple[int, ...] = ()

    def __post_init__(self):
        vec = np.asarray(self.p, dtype=float)
        if vec.shape != (self.n + 1,):
            raise ValueError(f"expected length {self.n + 1}, got {vec.shape}")
        object.__setattr__(self, "p", vec)
        flags = tuple(
            w for w in range(self.n + 1) if vec[w] < -1e-15 or vec[w] > 1 + 1e-15
        )
        object.__setattr__(self, "nonphysical_weights", flags)

    @property
    def is_physical(self) -> bool:
        return not self.nonphysical_weights and abs(self.p.sum() - 1.0) <= 1e-9


@dataclass(frozen=True)
class EigenvalueVector:
    """Eigenvalues c_w of the symmetrised channel on weight-w observables."""

    n: int
    c: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.c, dtype=float)
        if vec.shape != (self.n + 1,):
            raise ValueError(f"expected length {self.n + 1}, got {vec.shape}")
        if vec[0] != 1.0:
            raise ValueError("c[0] must be exactly 1 (identity observable is fixed)")
        object.__setattr__(self, "c", vec)


@dataclass(frozen=True)
class PauliChannel:
    """Probability distribution over sign-stripped Pauli errors.

    ``terms`` maps ``(x_mask, z_mask)`` to a probability; probabilities must
    sum to 1 within PROB_SUM_TOL.
    """

    n: int
    terms: dict[tuple[int, int], float]
    pruned_mass: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        total = 0.0
        full = (1 << self.n) - 1
        for (x, z), a in self.terms.items():
            if x & ~full or z & ~full:
                raise ValueError("term mask exceeds qubit count")
            if a < -1e-15 or a > 1 + 1e-12:
                raise ValueError(f"probability {a} out of [0, 1]")
            total += a
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_strings(cls, entries: dict[str, float]) -> "PauliChannel":
        terms: dict[tuple[int, int], float] = {}
        n = None
        for text, a in entries.items():
            p = PauliString.from_text(text)
            n = p.n if n is None else n
            if p.n != n:
                raise ValueError("inconsistent qubit counts")
            key = (p.x_mask, p.z_mask)
            terms[key] = terms.get(key, 0.0) + float(a)
        return cls(n, terms)

    @classmethod
    def identity(cls, n: int) -> "PauliChannel":
        return cls(n, {(0, 0): 1.0})

    def probability(self, text: str) -> float:
        p = PauliString.from_text(text)
        return self.terms.get((p.x_mask, p.z_mask), 0.0)

    def items_as_strings(self) -> dict[str, float]:
        out = {}
        for (x, z), a in sorted(self.terms.items()):
            out[PauliString(self.n, x, z).to_text()] = a
        return out


@dataclass(frozen=True)
class KrausChannel:
    """Operator-sum channel; dense, so restricted to n <= MAX_KRAUS_QUBITS."""

    n: int
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not 1 <= self.n <= MAX_KRAUS_QUBITS:
            raise ValueError(f"Kraus channels support 1 <= n <= {MAX_KRAUS_QUBITS}")
        d = 2**self.n
        ops = tuple(np.asarray(a, dtype=complex) for a in self.operators)
        for a in ops:
            if a.shape != (d, d):
                raise ValueError(f"operator shape {a.shape} != ({d}, {d})")
        object.__setattr__(self, "operators", ops)

    def trace_preserving_deviation(self) -> float:
        d = 2**self.n
        acc = np.zeros((d, d), dtype=complex)
        for a in self.operators:
            acc += a.conj().T @ a
        return float(np.max(np.abs(acc - np.eye(d))))


def validate(k: KrausChannel) -> dict:
    """Report how far the Kraus set is from trace preserving."""
    dev = k.trace_preserving_deviation()
    return {"max_deviation": dev, "passed": dev <= TRACE_PRESERVING_TOL}


def _pauli_trace(a: np.ndarray, n: int, x: int, z: int) -> complex:
    """Tr[a P] for the Pauli with masks (x, z), without materialising P.

    P|m> = i^{#Y} (-1)^{popcount(m & z)} |m XOR x>, so the trace picks the
    (m, m XOR x) entries of ``a`` with those phases.
    """
    dim = 1 << n
    m = np.arange(dim)
    col = a[m, m ^ x]
    zpar = np.zeros(dim, dtype=np.int64)
    for j in range(n):
        if (z >> j) & 1:
            zpar ^= (m >> j) & 1
    n_y = (x & z).bit_count()
    return (1j**n_y) * np.sum(col * np.where(zpar, -1.0, 1.0))


def pauli_decompose(k: KrausChannel) -> PauliChannel:
    """Pauli channel produced by Pauli-twirling a Kraus channel.

    The probability of error P is ``sum_k |Tr(A_k P)|^2 / D^2``.  Raises when
    the input is not trace preserving.
    """
    report = validate(k)
    if not report["passed"]:
        raise ValueError(
            f"channel is not trace preserving (deviation {report['max_deviation']:.3e})"
        )
    n = k.n
    d2 = float((2**n) ** 2)
    terms: dict[tuple[int, int], float] = {}
    for codes in itertools.product(range(4), repeat=n):
        x = sum((c & 1) << j for j, c in enumerate(codes))
        z = sum(((c >> 1) & 1) << j for j, c in enumerate(codes))
        a_i = sum(abs(_pauli_trace(a, n, x, z)) ** 2 for a in k.operators) / d2
        if a_i > 0.0:
            terms[(x, z)] = a_i
    total = sum(terms.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"decomposition sums to {total}; input channel invalid")
    # Remove float dust so the distribution sums to 1 within PROB_SUM_TOL.
    terms = {key: a / total for key, a in terms.items()}
    return PauliChannel(n, terms)


def weight_distribution(ch: PauliChannel) -> WeightDistribution:
    p = np.zeros(ch.n + 1)
    for (x, z), a in ch.terms.items():
        p[(x | z).bit_count()] += a
    return WeightDistribution(ch.n, p)


def depolarizing_product(per_qubit_p) -> PauliChannel:
    """Tensor product of single-qubit depolarizing channels.

    Site j is left alone with probability ``1 - p[j]`` and hit by each of X,
    Y, Z with probability ``p[j] / 3``.
    """
    probs = [float(v) for v in np.atleast_1d(per_qubit_p)]
    if any(not 0.0 <= v <= 1.0 for v in probs):
        raise ValueError("per-qubit probabilities must lie in [0, 1]")
    n = len(probs)
    terms: dict[tuple[int, int], float] = {(0, 0): 1.0}
    for j, pj in enumerate(probs):
        new: dict[tuple[int, int], float] = {}
        factors = [(0, 1.0 - pj), (1, pj / 3), (2, pj / 3), (3, pj / 3)]
        for (x, z), a in terms.items():
            for code, f in factors:
                if f == 0.0:
                    continue
                key = (x | ((code & 1) << j), z | (((code >> 1) & 1) << j))
                new[key] = new.get(key, 0.0) + a * f
        terms = new
    return PauliChannel(n, terms)


def compose(a: PauliChannel, b: PauliChannel) -> PauliChannel:
    """Convolution of two Pauli channels under sign-stripped multiplication.

    Terms below COMPOSE_PRUNE_THRESHOLD are pruned and the remaining mass is
    renormalized; the pruned total is reported on the result.
    """
    if a.n != b.n:
        raise ValueError(f"qubit counts differ: {a.n} vs {b.n}")
    terms: dict[tuple[int, int], float] = {}
    for (xa, za), pa in a.terms.items():
        for (xb, zb), pb in b.terms.items():
            key = (xa ^ xb, za ^ zb)
            terms[key] = terms.get(key, 0.0) + pa * pb
    pruned = 0.0
    kept: dict[tuple[int, int], float] = {}
    for key, v in terms.items():
        if v < COMPOSE_PRUNE_THRESHOLD:
            pruned += v
        else:
            kept[key] = v
    total = sum(kept.values())
    kept = {key: v / total for key, v in kept.items()}
    return PauliChannel(a.n, kept, pruned_mass=pruned)


def _z_on(site: int, n: int) -> np.ndarray:
    m = np.arange(1 << n)
    diag = np.where((m >> site) & 1, -1.0, 1.0)
    return np.diag(diag).astype(complex)


def engineered_channel(fixture_id: str) -> KrausChannel:
    """The four engineered reference channels, built symbolically from Z factors."""
    if fixture_id == "chcl3_z1z2_mix":
        ops = (_z_on(0, 2) / np.sqrt(2.0), _z_on(1, 2) / np.sqrt(2.0))
        return KrausChannel(2, ops)
    if fixture_id == "chcl3_zz":
        return KrausChannel(2, (_z_on(0, 2) @ _z_on(1, 2),))
    if fixture_id == "chcl3_unitary":
        # exp(i pi/4 (Z_1 + Z_2)) = [(I + iZ)/sqrt(2)] on each qubit.
        u1 = (np.eye(2) + 1j * np.array([[1, 0], [0, -1]])) / np.sqrt(2.0)
        return KrausChannel(2, (np.kron(u1, u1),))
    if fixture_id == "malonic_z_mix":
        ops = tuple(_z_on(j, 3) / np.sqrt(3.0) for j in range(3))
        return KrausChannel(3, ops)
    raise KeyError(f"unknown fixture id {fixture_id!r}; known: {FIXTURE_IDS}")
