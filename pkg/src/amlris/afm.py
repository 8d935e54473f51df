"""Alignment-aware filtering masking: turn a patch-level similarity map into
a block mask and black out the poorly aligned blocks of an image."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .netpbm import ImageRGB, MaskBitmap
from .pmme import SimilarityMap
from .rng import STREAM_DROPOUT, new_stream
from .tensor import as_tensor


@dataclass(frozen=True)
class AmlConfig:
    tau: float = 0.4
    rho: float = 0.25
    block_h: int = 32
    block_w: int = 32
    d_a: int = 2048
    grid_h: int = 14
    grid_w: int = 14
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        for name in ("block_h", "block_w", "d_a", "grid_h", "grid_w"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True, eq=False)
class PixelSet:
    """Pixel coordinates as an (n, 2) int array of (row, col), strictly
    increasing in row-major order."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2)
        if len(c) and c.min() < 0:
            raise ValueError("pixel coordinates must be non-negative")
        if len(c) > 1:
            key = _linear_key(c)
            if not (np.diff(key) > 0).all():
                raise ValueError("pixel coordinates are not in canonical order")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_pixels(cls, pixels) -> "PixelSet":
        c = np.asarray(list(pixels), dtype=np.int64).reshape(-1, 2)
        return cls(np.unique(c, axis=0))

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return (tuple(map(int, rc)) for rc in self.coords)

    def __eq__(self, other):
        if not isinstance(other, PixelSet):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def to_set(self) -> set[tuple[int, int]]:
        return set(self)


def _linear_key(c):
    # lexicographic order on (row, col) for non-negative coordinates
    return c[:, 0] * (int(c[:, 1].max()) + 1) + c[:, 1] if len(c) else c[:, 0]


@dataclass(frozen=True, eq=False)
class BlockMask:
    """Block-level mask; bit 1 means the block is zeroed.

    ``height``/``width`` are the pixel dimensions the grid covers; edge
    blocks are clipped when they do not divide evenly.
    """

    bits: np.ndarray
    block_h: int
    block_w: int
    height: int
    width: int

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits, dtype=np.uint8)
        expect = (math.ceil(self.height / self.block_h), math.ceil(self.width / self.block_w))
        if b.shape != expect:
            raise ShapeError(f"block grid {b.shape} does not cover {self.height}x{self.width} with {self.block_h}x{self.block_w} blocks")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("block mask bits must be 0 or 1")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def masked_fraction(self) -> float:
        return float(self.bits.mean())

    def __eq__(self, other):
        if not isinstance(other, BlockMask):
            return NotImplemented
        return (self.block_h, self.block_w, self.height, self.width) == (
            other.block_h, other.block_w, other.height, other.width
        ) and np.array_equal(self.bits, other.bits)

    def pixel_mask(self) -> np.ndarray:
        """Expand to an (height, width) uint8 array."""
        full = np.repeat(np.repeat(self.bits, self.block_h, axis=0), self.block_w, axis=1)
        return full[: self.height, : self.width]

    def to_bitmap(self) -> MaskBitmap:
        """Block-resolution bitmap (one pixel per block)."""
        return MaskBitmap(self.bits)

    @classmethod
    def from_bitmap(cls, m: MaskBitmap, block_h: int, block_w: int, height: int, width: int) -> "BlockMask":
        return cls(m.bits, block_h, block_w, height, width)


def upsample_matrix(src: int, dst: int) -> np.ndarray:
    """Interpolation weights [dst, src] for 1-D half-pixel-center bilinear
    resampling; separable 2-D upsampling is ``U_h @ S @ U_w.T``."""
    if src < 1 or dst < 1:
        raise ShapeError("sizes must be positive")
    x = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    x = np.clip(x, 0.0, src - 1)
    i0 = np.floor(x).astype(np.int64)
    i1 = np.minimum(i0 + 1, src - 1)
    frac = x - i0
    u = np.zeros((dst, src))
    rows = np.arange(dst)
    np.add.at(u, (rows, i0), 1.0 - frac)
    np.add.at(u, (rows, i1), frac)
    return u


def bilinear_upsample(s: SimilarityMap, height: int, width: int) -> np.ndarray:
    grid = s.grid if isinstance(s, SimilarityMap) else np.asarray(s)
    h_f, w_f = grid.shape
    if height < h_f or width < w_f:
        raise ShapeError(f"cannot upsample {h_f}x{w_f} to smaller {height}x{width}")
    u_h = upsample_matrix(h_f, height)
    u_w = upsample_matrix(w_f, width)
    return as_tensor(u_h @ grid.astype(np.float64) @ u_w.T)


def weak_pixels(s_pixel, tau: float) -> PixelSet:
    """Pixels whose upsampled score is strictly below ``tau``."""
    return PixelSet(np.argwhere(np.asarray(s_pixel) < tau))


def dropout_select(weak: PixelSet, rho: float, seed: int) -> PixelSet:
    """Keep each weak pixel independently with probability ``1 - rho``.

    One uniform is drawn per pixel, in canonical order, from the dropout
    stream of ``seed``.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    u = new_stream(seed, STREAM_DROPOUT).uniform(len(weak))
    return PixelSet(weak.coords[u < 1.0 - rho])


def block_aggregate(sel: PixelSet, height: int, width: int, block_h: int, block_w: int) -> BlockMask:
    """Any selected pixel inside a block masks the whole block."""
    bits = np.zeros((math.ceil(height / block_h), math.ceil(width / block_w)), dtype=np.uint8)
    c = sel.coords
    if len(c):
        if c.min() < 0 or c[:, 0].max() >= height or c[:, 1].max() >= width:
            raise ShapeError(f"pixel outside the {height}x{width} image")
        bits[c[:, 0] // block_h, c[:, 1] // block_w] = 1
    return BlockMask(bits, block_h, block_w, height, width)


def apply_mask(img: ImageRGB, mask: BlockMask) -> ImageRGB:
    if (mask.height, mask.width) != (img.height, img.width):
        raise ShapeError(f"mask covers {mask.height}x{mask.width}, image is {img.height}x{img.width}")
    keep = (1 - mask.pixel_mask())[:, :, None]
    return ImageRGB(img.pixels * keep)


def afm(s: SimilarityMap, img: ImageRGB, cfg: AmlConfig) -> tuple[ImageRGB, BlockMask]:
    s_pixel = bilinear_upsample(s, img.height, img.width)
    selected = dropout_select(weak_pixels(s_pixel, cfg.tau), cfg.rho, cfg.seed)
    mask = block_aggregate(selected, img.height, img.width, cfg.block_h, cfg.block_w)
    return apply_mask(img, mask), mask
