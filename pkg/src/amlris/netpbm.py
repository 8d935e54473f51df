"""Binary PPM (P6) and PGM (P5) IO for RGB images and binary masks."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import ImageFormatError, MaskNotBinaryError, ShapeError


@dataclass(frozen=True, eq=False)
class ImageRGB:
    """8-bit RGB image; ``pixels`` has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ShapeError(f"RGB pixels must be (H, W, 3), got {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ImageRGB):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


@dataclass(frozen=True, eq=False)
class MaskBitmap:
    """Binary mask; ``bits`` has shape (height, width) with values in {0, 1}."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ShapeError(f"mask bits must be (H, W), got {b.shape}")
        if not np.isin(b, (0, 1)).all():
            raise MaskNotBinaryError("mask not binary")
        b = np.ascontiguousarray(b, dtype=np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MaskBitmap):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _parse_header(buf: bytes, magic: bytes):
    if buf[:2] != magic:
        if buf[:2] in (b"P1", b"P2", b"P3", b"P4", b"P5", b"P6"):
            raise ImageFormatError(f"unsupported netpbm variant {buf[:2].decode()}, expected {magic.decode()}")
        raise ImageFormatError("not a netpbm file")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise ImageFormatError("truncated header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise ImageFormatError(f"malformed header field {m.group(1)!r}") from None
        pos = m.end()
    if pos >= len(buf) or buf[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise ImageFormatError("truncated header")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid size {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval}, only 255")
    return width, height, pos + 1


def decode_ppm(buf: bytes) -> ImageRGB:
    w, h, off = _parse_header(buf, b"P6")
    n = 3 * w * h
    if len(buf) - off < n:
        raise ImageFormatError("pixel data truncated")
    px = np.frombuffer(buf, dtype=np.uint8, count=n, offset=off).reshape(h, w, 3)
    return ImageRGB(px.copy())


def encode_ppm(img: ImageRGB) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def decode_pgm(buf: bytes) -> MaskBitmap:
    w, h, off = _parse_header(buf, b"P5")
    n = w * h
    if len(buf) - off < n:
        raise ImageFormatError("pixel data truncated")
    px = np.frombuffer(buf, dtype=np.uint8, count=n, offset=off).reshape(h, w)
    if not np.isin(px, (0, 255)).all():
        raise MaskNotBinaryError("mask not binary")
    return MaskBitmap((px == 255).astype(np.uint8))


def encode_pgm(mask: MaskBitmap) -> bytes:
    return b"P5\n%d %d\n255\n" % (mask.width, mask.height) + (mask.bits * np.uint8(255)).tobytes()


def read_ppm(path: str | os.PathLike) -> ImageRGB:
    with open(path, "rb") as fh:
        return decode_ppm(fh.read())


def write_ppm(img: ImageRGB, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(img))


def read_pgm(path: str | os.PathLike) -> MaskBitmap:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(mask: MaskBitmap, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(mask))
