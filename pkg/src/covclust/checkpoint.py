"""Binary solver-state checkpoints.

A custom fixed-layout format (magic, version, dims, then little-endian
float64/int64 payloads) instead of an archive container: no timestamps or
compression metadata, so identical states produce identical bytes.  The
edge list is stored alongside the variables so a resumed run can verify
it is continuing the same problem.
"""

from __future__ import annotations

import struct

import numpy as np

from .admm import AdmmState
from .data import ModelParams
from .errors import InputError

__all__ = ["save_state", "load_state"]

MAGIC = b"CVCLCKPT"
VERSION = 1
_HEADER = struct.Struct("<8sIIqqqqdd")  # magic, ver, converged, c, d, l, k, rho, nu


def _write_array(fh, arr, dtype):
    fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def save_state(path, state: AdmmState, nu: float = float("nan")) -> None:
    c, d = state.params.c, state.params.d
    l = state.l
    header = _HEADER.pack(MAGIC, VERSION, int(state.converged), c, d, l,
                          state.k, state.rho, float(nu))
    with open(path, "wb") as fh:
        fh.write(header)
        _write_array(fh, state.params.B, "<f8")
        _write_array(fh, state.params.beta0, "<f8")
        _write_array(fh, state.z, "<f8")
        _write_array(fh, state.u, "<f8")
        _write_array(fh, state.edges, "<i8")


def _read_array(fh, count, dtype, path):
    nbytes = count * np.dtype(dtype).itemsize
    buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise InputError(f"{path}: truncated checkpoint")
    return np.frombuffer(buf, dtype=dtype).astype(dtype.replace("<", "="))


def load_state(path):
    """Returns (state, nu) reconstructed from a checkpoint file."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise InputError(f"{path}: not a checkpoint file")
        magic, version, converged, c, d, l, k, rho, nu = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise InputError(f"{path}: bad magic, not a checkpoint file")
        if version != VERSION:
            raise InputError(
                f"{path}: unsupported checkpoint version {version}")
        B = _read_array(fh, c * d, "<f8", path).reshape(c, d)
        beta0 = _read_array(fh, c, "<f8", path)
        z = _read_array(fh, 2 * l * c, "<f8", path).reshape(2 * l, c)
        u = _read_array(fh, 2 * l * c, "<f8", path).reshape(2 * l, c)
        edges = _read_array(fh, l * 2, "<i8", path).reshape(l, 2)
        if fh.read(1):
            raise InputError(f"{path}: trailing bytes in checkpoint")
    state = AdmmState(params=ModelParams(B, beta0), z=z, u=u, rho=rho,
                      k=int(k), converged=bool(converged), edges=edges)
    return state, float(nu)
