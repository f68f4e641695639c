"""Kernel backend selection: compiled Cython core with NumPy fallback.

Chosen once at import. PSYMAN_BACKEND overrides the default:

    auto      compiled extension when importable, else NumPy (default)
    compiled  require psyman._kernels, fail loudly if missing
    numpy     force the pure NumPy kernels

The two backends agree to floating-point tolerance, not bit for bit; any
single backend is fully deterministic for a fixed seed.
"""

from __future__ import annotations

import os

from . import kernels_py
from .errors import ConfigError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _select():
    choice = os.environ.get("PSYMAN_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return _compiled if _compiled is not None else kernels_py
    if choice == "compiled":
        if _compiled is None:
            raise ConfigError("PSYMAN_BACKEND=compiled but psyman._kernels is not built")
        return _compiled
    if choice == "numpy":
        return kernels_py
    raise ConfigError(f"unknown PSYMAN_BACKEND value {choice!r} (auto|compiled|numpy)")


K = _select()
BACKEND_NAME: str = K.NAME
