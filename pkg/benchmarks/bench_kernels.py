"""Benchmark the trial-simulation kernels: numba JIT vs pure numpy.

Usage::

    python benchmarks/bench_kernels.py [--trials 200000] [--qubits 8] [--repeats 5]

The first numba call compiles (excluded via a warm-up run); the table reports
the best of ``--repeats`` timed runs and checks that both backends produced
bit-identical outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from twirlkit.backend import available_backends, get_backend
from twirlkit.channels import depolarizing_product
from twirlkit.protocol import ProtocolConfig, SpamModel, simulate_ensemble, simulate_standard


def time_call(fn, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--qubits", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    backends = available_backends()
    if "numba" not in backends:
        print("numba not importable; nothing to compare")
        return

    n, k = args.qubits, args.trials
    ch = depolarizing_product([0.08] * n)
    spam = SpamModel.uniform(n, 0.02, 0.03)
    cfg = ProtocolConfig(n=n, channel=ch, trials=k, master_seed=7, spam_model=spam)

    # warm-up: trigger JIT compilation outside the timed region
    get_backend("numba")
    warm = ProtocolConfig(n=n, channel=ch, trials=8, master_seed=7, spam_model=spam)
    simulate_standard(warm, backend="numba")
    simulate_ensemble(warm, max(1, n // 2), backend="numba")

    rows = []
    outputs = {}
    for backend in ("numpy", "numba"):
        t_std, out_std = time_call(lambda b=backend: simulate_standard(cfg, backend=b),
                                   args.repeats)
        t_ens, out_ens = time_call(
            lambda b=backend: simulate_ensemble(cfg, max(1, n // 2), backend=b),
            args.repeats,
        )
        outputs[backend] = (out_std, out_ens)
        rows.append((backend, t_std, t_ens))

    a, b = outputs["numpy"], outputs["numba"]
    identical = (
        np.array_equal(a[0].outcomes, b[0].outcomes)
        and np.array_equal(a[0].clifford_ids, b[0].clifford_ids)
        and np.array_equal(a[1].outcomes, b[1].outcomes)
        and np.array_equal(a[1].permutations, b[1].permutations)
    )

    print(f"\ntrials={k} qubits={n} (best of {args.repeats})")
    print(f"{'backend':<8} {'standard':>12} {'ensemble':>12}")
    for backend, t_std, t_ens in rows:
        print(f"{backend:<8} {t_std * 1e3:>10.1f}ms {t_ens * 1e3:>10.1f}ms")
    np_row = rows[0]
    nb_row = rows[1]
    print(f"{'speedup':<8} {np_row[1] / nb_row[1]:>11.2f}x {np_row[2] / nb_row[2]:>11.2f}x")
    print(f"outputs bit-identical: {identical}")
    if not identical:
        raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
