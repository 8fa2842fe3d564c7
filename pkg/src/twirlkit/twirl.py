"""Exact symmetrisation of noise channels.

``exact_twirl`` collapses a Pauli channel to its per-support rates and the
weight distribution analytically.  ``exact_twirl_bruteforce`` is the
independent oracle: it enumerates every single-qubit Clifford layer (24^n of
them, so n <= 2), conjugates the channel as a dense superoperator, averages,
and reads the weight distribution off the result.  The two must agree for any
valid channel; the test suite and acceptance gate lean on exactly that.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .channels import EigenvalueVector, KrausChannel, PauliChannel, WeightDistribution
from .pauli import PauliString, layer_unitary

MAX_BRUTEFORCE_QUBITS = 2


def eigenvalues(ch: PauliChannel) -> EigenvalueVector:
    """Per-weight observable eigenvalues of the symmetrised channel."""
    from .weightspace import omega

    _, wd = exact_twirl(ch)
    c = omega(ch.n) @ wd.p
    c[0] = 1.0
    return EigenvalueVector(ch.n, c)


def exact_twirl(ch: PauliChannel) -> tuple[dict[int, float], WeightDistribution]:
    """Per-support rates and weight distribution of the symmetrised channel.

    Returns ``(rates, p)`` where ``rates`` maps each occupied support mask to
    the average term probability over the 3^w error types at that support,
    and ``p[w]`` is the total probability of weight-w errors.
    """
    support_prob: dict[int, float] = {}
    for (x, z), a in ch.terms.items():
        s = x | z
        support_prob[s] = support_prob.get(s, 0.0) + a
    rates = {s: v / (3 ** s.bit_count()) for s, v in support_prob.items()}
    p = np.zeros(ch.n + 1)
    for s, v in support_prob.items():
        p[s.bit_count()] += v
    return rates, WeightDistribution(ch.n, p)


def symmetrized_channel(n: int, p) -> PauliChannel:
    """Materialise the fully symmetrised channel with weight distribution p.

    Every weight-w Pauli gets probability ``p[w] / (3^w C(n, w))``.  Term
    count is 4^n, so keep n small.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (n + 1,):
        raise ValueError(f"expected length {n + 1}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p must be a probability vector")
    if n > 8:
        raise ValueError("materialisation needs 4^n terms; n > 8 refused")
    terms: dict[tuple[int, int], float] = {}
    from .pauli import all_paulis

    for q in all_paulis(n):
        w = (q.x_mask | q.z_mask).bit_count()
        a = p[w] / (3**w * comb(n, w))
        if a > 0.0:
            terms[(q.x_mask, q.z_mask)] = a
    return PauliChannel(n, terms)


def _apply_kraus(ops, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for a in ops:
        out += a @ rho @ a.conj().T
    return out


def exact_twirl_bruteforce(k: KrausChannel) -> WeightDistribution:
    """Weight distribution of the twirled channel by full layer enumeration.

    For every one of the 24^n Clifford layers C the conjugated channel
    ``rho -> C^dag Lambda(C rho C^dag) C`` is applied to each Pauli basis
    matrix; averaging the diagonal of the resulting transfer map gives the
    eigenvalue of each Pauli, which a Walsh-type inversion over the
    commutation signs turns into error probabilities.
    """
    n = k.n
    if n > MAX_BRUTEFORCE_QUBITS:
        raise ValueError(
            f"brute force enumerates 24^n layers; n <= {MAX_BRUTEFORCE_QUBITS} only"
        )
    dim = 2**n
    n_paulis = 4**n

    paulis = []
    from .pauli import all_paulis

    for q in all_paulis(n):
        paulis.append(q)
    mats = [_dense_pauli(q) for q in paulis]

    # Average transfer-map diagonal over all layers.
    lam = np.zeros(n_paulis)
    layers = np.stack(
        np.meshgrid(*[np.arange(24)] * n, indexing="ij"), axis=-1
    ).reshape(-1, n)
    for ids in layers:
        u = layer_unitary(ids)
        ud = u.conj().T
        for i, r in enumerate(mats):
            evolved = ud @ _apply_kraus(k.operators, u @ r @ ud) @ u
            lam[i] += np.real(np.trace(r @ evolved)) / dim
    lam /= len(layers)

    # Pauli-channel probabilities from eigenvalues: lambda_R = sum_Q a_Q s(Q,R)
    # inverts to a_Q = 4^-n sum_R s(Q,R) lambda_R.
    probs = np.zeros(n_paulis)
    for qi, q in enumerate(paulis):
        acc = 0.0
        for ri, r in enumerate(paulis):
            form = (q.x_mask & r.z_mask).bit_count() + (q.z_mask & r.x_mask).bit_count()
            acc += lam[ri] * (1.0 if form % 2 == 0 else -1.0)
        probs[qi] = acc / n_paulis

    p = np.zeros(n + 1)
    for qi, q in enumerate(paulis):
        p[(q.x_mask | q.z_mask).bit_count()] += probs[qi]
    # Numerical dust from the dense average can leave tiny negatives.
    p[np.abs(p) < 1e-14] = 0.0
    return WeightDistribution(n, p)


def _dense_pauli(q: PauliString) -> np.ndarray:
    single = {
        0: np.eye(2, dtype=complex),
        1: np.array([[0, 1], [1, 0]], dtype=complex),
        2: np.array([[1, 0], [0, -1]], dtype=complex),
        3: np.array([[0, -1j], [1j, 0]], dtype=complex),
    }
    m = single[q.code_at(q.n - 1)]
    for j in reversed(range(q.n - 1)):
        m = np.kron(m, single[q.code_at(j)])
    return m * q.sign
