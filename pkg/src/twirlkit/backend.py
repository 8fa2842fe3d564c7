"""Kernel backend selection.

The hot Monte Carlo kernels exist twice: a numba JIT version and a pure-numpy
vectorized version with bit-identical output.  Selection order:

* ``TWIRLKIT_BACKEND=numba`` or ``TWIRLKIT_BACKEND=numpy`` forces a backend
  (``numba`` raises if numba is not importable),
* unset: numba when importable, else numpy.

``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

ENV_VAR = "TWIRLKIT_BACKEND"


def available_backends() -> list[str]:
    names = ["numpy"]
    try:
        import numba  # noqa: F401

        names.insert(0, "numba")
    except ImportError:
        pass
    return names


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (or the environment's choice)."""
    choice = name or os.environ.get(ENV_VAR, "").strip().lower() or None
    if choice is None:
        choice = "numba" if "numba" in available_backends() else "numpy"
    if choice == "numba":
        from . import _kernels_numba

        return _kernels_numba
    if choice == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy
    raise ValueError(f"unknown backend {choice!r}; use 'numba' or 'numpy'")
