"""Dense float32 tensors and the AMLT binary container.

Tensors are plain ``numpy.ndarray`` objects; :func:`as_tensor` enforces the
value-type rules (float32, C order, 1 to 4 positive axes). The on-disk layout::

    b"AMLT" | version u8 = 1 | dtype u8 = 1 (f32) | ndim u8 | ndim x u32 LE dims
    | row-major f32 LE payload
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import (
    BadMagicError,
    NonFiniteError,
    ShapeError,
    TensorFormatError,
    TruncatedError,
    VersionMismatchError,
)

MAGIC = b"AMLT"
VERSION = 1
DTYPE_F32 = 1
MAX_NDIM = 4

_LE_F32 = np.dtype("<f4")


def as_tensor(x, *, check_finite: bool = False) -> np.ndarray:
    """Coerce ``x`` to a C-contiguous float32 array with 1..4 positive axes."""
    t = np.ascontiguousarray(x, dtype=np.float32)
    if t.ndim == 0:
        t = t.reshape(1)
    if t.ndim > MAX_NDIM:
        raise ShapeError(f"tensors have at most {MAX_NDIM} axes, got {t.ndim}")
    if any(d < 1 for d in t.shape):
        raise ShapeError(f"all dimensions must be positive, got {t.shape}")
    if check_finite and not np.isfinite(t).all():
        raise NonFiniteError("tensor contains NaN or Inf")
    return t


def encode_tensor(t) -> bytes:
    t = as_tensor(t, check_finite=True)
    header = MAGIC + struct.pack("<BBB", VERSION, DTYPE_F32, t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape)
    return header + t.astype(_LE_F32, copy=False).tobytes(order="C")


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < 7:
        raise TruncatedError("header truncated")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    version, dtype, ndim = struct.unpack_from("<BBB", buf, 4)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported AMLT version {version}")
    if dtype != DTYPE_F32:
        raise TensorFormatError(f"unsupported dtype code {dtype}")
    if not 1 <= ndim <= MAX_NDIM:
        raise TensorFormatError(f"invalid ndim {ndim}")
    off = 7 + 4 * ndim
    if len(buf) < off:
        raise TruncatedError("dimension table truncated")
    shape = struct.unpack_from(f"<{ndim}I", buf, 7)
    if any(d == 0 for d in shape):
        raise TensorFormatError(f"zero-sized dimension in {shape}")
    count = int(np.prod(shape, dtype=np.int64))
    need = off + 4 * count
    if len(buf) < need:
        raise TruncatedError(f"payload truncated: {len(buf) - off} of {4 * count} bytes")
    if len(buf) > need:
        raise TensorFormatError(f"{len(buf) - need} trailing bytes after payload")
    data = np.frombuffer(buf, dtype=_LE_F32, count=count, offset=off)
    if not np.isfinite(data).all():
        raise NonFiniteError("payload contains NaN or Inf")
    return data.astype(np.float32).reshape(shape)


def write_tensor(t, path: str | os.PathLike) -> None:
    data = encode_tensor(t)
    with open(path, "wb") as fh:
        fh.write(data)


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())
