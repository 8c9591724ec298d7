"""Backend selection for the hot kernels.

Set ``CATPULSE_BACKEND=numpy`` (or ``CATPULSE_DISABLE_NUMBA=1``) before import to
force the pure-numpy code paths. Numba is used whenever it imports cleanly.
"""
from __future__ import annotations

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _env_backend() -> str:
    if os.environ.get("CATPULSE_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return "numpy"
    requested = os.environ.get("CATPULSE_BACKEND", "").strip().lower()
    if requested in ("numpy", "numba"):
        return requested if (requested == "numpy" or HAS_NUMBA) else "numpy"
    return "numba" if HAS_NUMBA else "numpy"


DEFAULT_BACKEND = _env_backend()


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return DEFAULT_BACKEND
    backend = backend.lower()
    if backend not in ("numpy", "numba"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        return "numpy"
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
