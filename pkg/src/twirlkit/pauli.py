"""Bit-packed n-qubit Pauli group and the 24-element single-qubit Clifford group.

Pauli operators are stored as two integer bit masks plus a sign:

* ``x_mask`` bit j is set when the factor at site j has an X component (X or Y),
* ``z_mask`` bit j is set when the factor at site j has a Z component (Z or Y),
* ``sign`` is +1 or -1 (conjugation by a Clifford never produces a factor of
  +/-i on a Pauli, so a sign bit is sufficient).

The per-site factor code used throughout is ``code = x_bit | (z_bit << 1)``::

    0 = I,  1 = X,  2 = Z,  3 = Y

Masks are arbitrary-precision Python integers; the practical soft cap is
n <= 4096 per mask (memory and conversion costs grow past that, nothing
breaks earlier).

Single-qubit Cliffords are enumerated canonically by their conjugation images
``(image_of_x, image_of_z)``, ordered lexicographically with Pauli letters in
X < Y < Z order and sign +1 before -1.  This fixed order makes recorded
element ids replayable.  Element 2 (X -> +X, Z -> +Z) is the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ._rng import Stream

CODE_I, CODE_X, CODE_Z, CODE_Y = 0, 1, 2, 3
CODE_TO_CHAR = {CODE_I: "I", CODE_X: "X", CODE_Y: "Y", CODE_Z: "Z"}
CHAR_TO_CODE = {v: k for k, v in CODE_TO_CHAR.items()}

# Letter index used for the Levi-Civita sign rule (X=1, Y=2, Z=3).
_LETTER = {CODE_X: 1, CODE_Y: 2, CODE_Z: 3}
_EPS = {(1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
        (1, 3, 2): -1, (3, 2, 1): -1, (2, 1, 3): -1}

N_CLIFFORD = 24


class SizeMismatchError(ValueError):
    """Operands act on different numbers of qubits."""


@dataclass(frozen=True, slots=True)
class PauliString:
    """Signed n-qubit Pauli operator in the bit-packed representation."""

    n: int
    x_mask: int
    z_mask: int
    sign: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits beyond qubit count")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        """Parse the text form, e.g. ``-XIZ`` (site 0 is the leftmost letter)."""
        s = text.strip()
        sign = 1
        if s[:1] in ("+", "-", "−"):
            sign = 1 if s[0] == "+" else -1
            s = s[1:]
        if not s:
            raise ValueError(f"empty Pauli string: {text!r}")
        x = z = 0
        for j, ch in enumerate(s):
            try:
                code = CHAR_TO_CODE[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {text!r}") from None
            x |= (code & 1) << j
            z |= (code >> 1) << j
        return cls(len(s), x, z, sign)

    def to_text(self) -> str:
        letters = "".join(CODE_TO_CHAR[self.code_at(j)] for j in range(self.n))
        return ("-" if self.sign < 0 else "") + letters

    def code_at(self, j: int) -> int:
        return ((self.x_mask >> j) & 1) | (((self.z_mask >> j) & 1) << 1)

    def codes(self) -> np.ndarray:
        """Per-site factor codes as a uint8 array of length n."""
        return np.array([self.code_at(j) for j in range(self.n)], dtype=np.uint8)

    @classmethod
    def from_codes(cls, codes: Iterable[int], sign: int = 1) -> "PauliString":
        x = z = 0
        codes = list(codes)
        for j, code in enumerate(codes):
            x |= (int(code) & 1) << j
            z |= ((int(code) >> 1) & 1) << j
        return cls(len(codes), x, z, sign)

    def __str__(self) -> str:
        return self.to_text()


def weight(p: PauliString) -> int:
    """Number of non-identity tensor factors."""
    return (p.x_mask | p.z_mask).bit_count()


def commutes(p: PauliString, q: PauliString) -> bool:
    """True when the symplectic form of the pair is even (operators commute)."""
    if p.n != q.n:
        raise SizeMismatchError(f"{p.n} vs {q.n} qubits")
    form = (p.x_mask & q.z_mask).bit_count() + (p.z_mask & q.x_mask).bit_count()
    return form % 2 == 0


@dataclass(frozen=True, slots=True)
class SingleQubitClifford:
    """One of the 24 single-qubit Clifford elements (modulo global phase)."""

    id: int
    image_of_x: tuple[int, int]  # (pauli code, sign) of C X C^dagger
    image_of_z: tuple[int, int]

    def unitary(self) -> np.ndarray:
        """A 2x2 unitary realising this element (phase-normalized H/S word)."""
        return _tables().unitaries[self.id].copy()


@dataclass(frozen=True, slots=True)
class CliffordLayer:
    """Tensor product of independent single-qubit Clifford elements."""

    elements: tuple[SingleQubitClifford, ...]

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.elements)

    @classmethod
    def from_ids(cls, ids: Iterable[int]) -> "CliffordLayer":
        table = enumerate_cliffords()
        return cls(tuple(table[int(i)] for i in ids))

    def inverse(self) -> "CliffordLayer":
        inv = _tables().inverse
        return CliffordLayer.from_ids(inv[i] for i in self.ids)


@dataclass(frozen=True, slots=True)
class QubitPermutation:
    """Bijection on site indices; ``mapping[j]`` is the new site of factor j."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("mapping is not a permutation")

    @property
    def n(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "QubitPermutation":
        return cls(tuple(range(n)))


class _CliffordTables:
    """Precomputed group data: conjugation images, composition, inverses, unitaries."""

    __slots__ = ("elements", "conj_code", "conj_sign", "compose", "inverse",
                 "identity_id", "unitaries")

    def __init__(self):
        # Signed non-identity Paulis in canonical order (letter X < Y < Z, + before -).
        letter_order = (CODE_X, CODE_Y, CODE_Z)
        signed = [(c, s) for c in letter_order for s in (1, -1)]

        specs: list[tuple[tuple[int, int], tuple[int, int]]] = []
        for img_x in signed:
            for img_z in signed:
                if img_z[0] != img_x[0]:
                    specs.append((img_x, img_z))
        assert len(specs) == N_CLIFFORD

        self.elements = tuple(
            SingleQubitClifford(i, img_x, img_z) for i, (img_x, img_z) in enumerate(specs)
        )

        conj_code = np.zeros((N_CLIFFORD, 4), dtype=np.uint8)
        conj_sign = np.ones((N_CLIFFORD, 4), dtype=np.int8)
        for i, (img_x, img_z) in enumerate(specs):
            (ax, sx), (az, sz) = img_x, img_z
            ay = ax ^ az
            # C Y C^dag = i (C X C^dag)(C Z C^dag); the product of two distinct
            # non-identity Paulis contributes i * epsilon.
            sy = -sx * sz * _EPS[(_LETTER[ax], _LETTER[az], _LETTER[ay])]
            conj_code[i] = (CODE_I, ax, az, ay)
            conj_sign[i] = (1, sx, sz, sy)
        self.conj_code = conj_code
        self.conj_sign = conj_sign

        index = {spec: i for i, spec in enumerate(specs)}
        self.identity_id = index[((CODE_X, 1), (CODE_Z, 1))]

        compose = np.zeros((N_CLIFFORD, N_CLIFFORD), dtype=np.uint8)
        for a in range(N_CLIFFORD):
            for b in range(N_CLIFFORD):
                # U_a U_b conjugation: push b's images through a.
                imgs = []
                for code, sign in specs[b]:
                    imgs.append((int(conj_code[a, code]),
                                 int(sign * conj_sign[a, code])))
                compose[a, b] = index[(imgs[0], imgs[1])]
        self.compose = compose

        inverse = np.zeros(N_CLIFFORD, dtype=np.uint8)
        for a in range(N_CLIFFORD):
            hits = np.nonzero(compose[a] == self.identity_id)[0]
            assert hits.size == 1
            inverse[a] = hits[0]
        self.inverse = inverse

        self.unitaries = _build_unitaries(index)


def _pauli_mat(code: int) -> np.ndarray:
    if code == CODE_I:
        return np.eye(2, dtype=complex)
    if code == CODE_X:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if code == CODE_Y:
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    return np.array([[1, 0], [0, -1]], dtype=complex)


def _identify_signed_pauli(m: np.ndarray) -> tuple[int, int]:
    for code in (CODE_X, CODE_Y, CODE_Z):
        ref = _pauli_mat(code)
        if np.allclose(m, ref, atol=1e-10):
            return code, 1
        if np.allclose(m, -ref, atol=1e-10):
            return code, -1
    raise ValueError("matrix is not a signed Pauli")


def _phase_normalize(u: np.ndarray) -> np.ndarray:
    flat = u.ravel()
    k = np.argmax(np.abs(flat) > 1e-9)
    return u / (flat[k] / abs(flat[k]))


def _build_unitaries(index: dict) -> np.ndarray:
    """BFS over <H, S> words; assign each resulting unitary to its element id."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    s = np.array([[1, 0], [0, 1j]], dtype=complex)
    x_mat, z_mat = _pauli_mat(CODE_X), _pauli_mat(CODE_Z)

    unitaries = np.zeros((N_CLIFFORD, 2, 2), dtype=complex)
    seen: dict[bytes, None] = {}
    frontier = [np.eye(2, dtype=complex)]
    found = 0
    while frontier and found < N_CLIFFORD:
        nxt = []
        for u in frontier:
            un = _phase_normalize(u)
            key = np.round(un, 9).tobytes()
            if key in seen:
                continue
            seen[key] = None
            img_x = _identify_signed_pauli(un @ x_mat @ un.conj().T)
            img_z = _identify_signed_pauli(un @ z_mat @ un.conj().T)
            eid = index[(img_x, img_z)]
            if not unitaries[eid].any():
                unitaries[eid] = un
                found += 1
            nxt.append(h @ u)
            nxt.append(s @ u)
        frontier = nxt
    assert found == N_CLIFFORD
    return unitaries


@lru_cache(maxsize=1)
def _tables() -> _CliffordTables:
    return _CliffordTables()


def enumerate_cliffords() -> tuple[SingleQubitClifford, ...]:
    """The 24 single-qubit Clifford elements in canonical id order."""
    return _tables().elements


def identity_clifford_id() -> int:
    return _tables().identity_id


def clifford_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Raw lookup tables ``(conj_code, conj_sign, compose, inverse)``.

    ``conj_code[c, p]`` / ``conj_sign[c, p]`` give the factor code and sign of
    ``C P C^dagger`` for element c acting on factor code p.
    """
    t = _tables()
    return t.conj_code, t.conj_sign, t.compose, t.inverse


def compose_cliffords(a: SingleQubitClifford, b: SingleQubitClifford) -> SingleQubitClifford:
    """Element realising conjugation by ``U_a U_b``."""
    t = _tables()
    return t.elements[int(t.compose[a.id, b.id])]


def conjugate(layer: CliffordLayer, p: PauliString) -> PauliString:
    """Return ``C P C^dagger`` with the correct overall sign."""
    if layer.n != p.n:
        raise SizeMismatchError(f"{layer.n} vs {p.n} qubits")
    t = _tables()
    x = z = 0
    sign = p.sign
    for j, elem in enumerate(layer.elements):
        code = p.code_at(j)
        out = int(t.conj_code[elem.id, code])
        sign *= int(t.conj_sign[elem.id, code])
        x |= (out & 1) << j
        z |= ((out >> 1) & 1) << j
    return PauliString(p.n, x, z, sign)


def permute(pi: QubitPermutation, p: PauliString) -> PauliString:
    """Move the factor at site j to site ``pi.mapping[j]``."""
    if pi.n != p.n:
        raise SizeMismatchError(f"{pi.n} vs {p.n} qubits")
    x = z = 0
    for j, dest in enumerate(pi.mapping):
        x |= ((p.x_mask >> j) & 1) << dest
        z |= ((p.z_mask >> j) & 1) << dest
    return PauliString(p.n, x, z, p.sign)


def sample_uniform_clifford_layer(rng_seed: int, n: int) -> CliffordLayer:
    """Draw each site's element independently and uniformly from the 24.

    Deterministic for a given seed; uses the shared SplitMix64 stream so a
    layer drawn here matches the one a simulation kernel draws from the same
    per-trial seed.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    stream = Stream(rng_seed)
    return CliffordLayer.from_ids(stream.next_below(N_CLIFFORD) for _ in range(n))


def layer_unitary(ids: Sequence[int]) -> np.ndarray:
    """Dense unitary of a Clifford layer, qubit 0 on the least-significant bit."""
    t = _tables()
    u = t.unitaries[int(ids[-1])]
    for i in reversed(range(len(ids) - 1)):
        u = np.kron(u, t.unitaries[int(ids[i])])
    return u


def all_paulis(n: int) -> Iterable[PauliString]:
    """All 4^n sign-positive Pauli strings (generator)."""
    for codes in itertools.product(range(4), repeat=n):
        yield PauliString.from_codes(codes)
