"""Kernel backend selection.

The compiled extension is used when importable; ``NLCERT_PURE=1`` forces
the numpy twin (used by the benchmark and the backend-agreement tests).
"""

import os

from . import _kernels_py as pure

compiled = None
if os.environ.get("NLCERT_PURE") != "1":
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

active = compiled if compiled is not None else pure
BACKEND = active.BACKEND
best_response_scan = active.best_response_scan

# S*T*d above which BLAS-backed numpy beats the compiled sweep loop
SWEEP_CROSSOVER = 1 << 15


def sweep_backend(S: int, T: int, d: int) -> str:
    if compiled is None or S * T * d > SWEEP_CROSSOVER:
        return pure.BACKEND
    return compiled.BACKEND


def alternating_sweeps(G, U, V, tol, max_sweeps):
    S, T = G.shape
    if sweep_backend(S, T, U.shape[1]) == pure.BACKEND:
        return pure.alternating_sweeps(G, U, V, tol, max_sweeps)
    return compiled.alternating_sweeps(G, U, V, tol, max_sweeps)


def thread_cap() -> int:
    """Worker cap from NGL_THREADS (default: CPU count, at least 1)."""
    raw = os.environ.get("NGL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)
