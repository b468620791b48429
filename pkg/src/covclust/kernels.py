"""Edge-kernel backend selection.

The per-edge updates (aggregates, auxiliary closed form, dual ascent,
residuals, fusion test) dominate solve time on dense similarity graphs,
so they exist twice: a Cython extension (covclust._edgecore) and a pure
numpy fallback (covclust._kernels_py) with identical semantics.  The
compiled backend is preferred when importable; set COVCLUST_KERNELS to
``compiled`` or ``numpy`` to force one, or ``auto`` for the default.
"""

from __future__ import annotations

import os

from . import _kernels_py
from .errors import InputError

try:
    from . import _edgecore
except ImportError:
    _edgecore = None

__all__ = ["available_backends", "get_backend", "default_backend"]

ENV_VAR = "COVCLUST_KERNELS"


def available_backends() -> dict:
    """Mapping of backend name to module for every importable backend."""
    out = {"numpy": _kernels_py}
    if _edgecore is not None:
        out["compiled"] = _edgecore
    return out


def get_backend(name: str | None = None):
    """Resolve a backend module from a name ('auto', 'compiled', 'numpy')."""
    if name in (None, "", "auto"):
        return _edgecore if _edgecore is not None else _kernels_py
    backends = available_backends()
    if name not in ("compiled", "numpy"):
        raise InputError(
            f"unknown kernel backend {name!r}; choose auto, compiled or numpy")
    if name not in backends:
        raise InputError(
            f"kernel backend {name!r} is not available in this install")
    return backends[name]


def default_backend():
    """Backend selected by the environment (or 'auto' when unset)."""
    return get_backend(os.environ.get(ENV_VAR))
