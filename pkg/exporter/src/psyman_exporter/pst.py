"""Minimal writer/reader for the .pst tensor container.

The format is a 4-byte magic ``PSYT``, a little-endian header
(version u16, dtype u8, flags u8, ndim u8), ``ndim`` u32 dimension
sizes, then the float32 payload in C order.  This module implements
just enough of it for export: version 1, dtype 0 (float32), flags 0,
1 to 4 dimensions.  It deliberately shares no code with the consumer
so that the byte layout is the only contract between the two sides.
"""

from __future__ import annotations

import struct

import numpy as np

_MAGIC = b"PSYT"
_HEADER = struct.Struct("<4sHBBB")
_VERSION = 1
_DTYPE_F32 = 0
_MAX_NDIM = 4


def tensor_bytes(array: np.ndarray) -> bytes:
    """Serialize a float array to .pst bytes.

    The array is converted to float32; every value must be finite.
    """
    arr = np.asarray(array, dtype=np.float32)
    if not 1 <= arr.ndim <= _MAX_NDIM:
        raise ValueError(f"tensor must have 1..{_MAX_NDIM} dimensions, got {arr.ndim}")
    if any(d <= 0 for d in arr.shape):
        raise ValueError(f"tensor dimensions must be positive, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("tensor payload contains non-finite values")
    arr = np.ascontiguousarray(arr)
    header = _HEADER.pack(_MAGIC, _VERSION, _DTYPE_F32, 0, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + dims + arr.tobytes(order="C")


def write_pst(path: str, array: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(tensor_bytes(array))


def read_pst(path: str) -> np.ndarray:
    """Read a .pst file back into a float32 array (for round-trip checks)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, dtype, _flags, ndim = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != _VERSION or dtype != _DTYPE_F32:
        raise ValueError(f"{path}: not a supported .pst file")
    if not 1 <= ndim <= _MAX_NDIM:
        raise ValueError(f"{path}: bad dimension count {ndim}")
    dims_end = _HEADER.size + 4 * ndim
    dims = struct.unpack(f"<{ndim}I", blob[_HEADER.size:dims_end])
    count = int(np.prod(dims))
    payload = blob[dims_end:]
    if len(payload) != 4 * count:
        raise ValueError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
