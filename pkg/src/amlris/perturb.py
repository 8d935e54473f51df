"""The seven visual perturbations used to build robustness corpora.

All arithmetic is float64 per channel, rounded half away from zero and
clamped to [0, 255]. The stochastic kinds (occlusion_box, patch_masking,
color_jitter) draw from the occlusion stream of an explicit seed.
"""

from __future__ import annotations

import enum
import math
import os
from pathlib import Path

import numpy as np

from .errors import AmlError, ShapeError
from .netpbm import ImageRGB, read_ppm, write_ppm
from .rng import STREAM_OCCLUSION, derive_seed, new_stream

HAZE_OPACITY = 0.5
HIGHLIGHT_FACTOR = 1.5
LOWLIGHT_FACTOR = 0.45
CONTRAST_FACTOR = 1.8
CONTRAST_PIVOT = 127.5
OCCLUSION_SIDE = 0.2
OCCLUSION_GRAY = 128
PATCH_COUNT = 3
PATCH_SIZE_RANGE = (0.05, 0.25)
JITTER_RANGE = (0.6, 1.4)
LUMA = np.array([0.299, 0.587, 0.114])
MIN_BOX_SIDE = 5


class PerturbKind(str, enum.Enum):
    HAZE = "haze"
    HIGHLIGHT = "highlight"
    LOWLIGHT = "lowlight"
    CONTRAST = "contrast"
    OCCLUSION_BOX = "occlusion_box"
    PATCH_MASKING = "patch_masking"
    COLOR_JITTER = "color_jitter"

    @property
    def stochastic(self) -> bool:
        return self in (PerturbKind.OCCLUSION_BOX, PerturbKind.PATCH_MASKING, PerturbKind.COLOR_JITTER)


class SeedError(AmlError):
    pass


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _to_u8(x) -> np.ndarray:
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)


def _occlusion(px, stream):
    h, w = px.shape[:2]
    side = math.floor(OCCLUSION_SIDE * min(w, h))
    top = stream.integers(0, h - side)
    left = stream.integers(0, w - side)
    out = px.copy()
    out[top : top + side, left : left + side] = OCCLUSION_GRAY
    return out


def _patch_masking(px, stream):
    h, w = px.shape[:2]
    lo, hi = PATCH_SIZE_RANGE
    out = px.copy()
    for _ in range(PATCH_COUNT):
        fw, fh = lo + (hi - lo) * stream.uniform(2)
        rw = max(1, int(round_half_away(fw * w)))
        rh = max(1, int(round_half_away(fh * h)))
        left = stream.integers(0, w - rw)
        top = stream.integers(0, h - rh)
        out[top : top + rh, left : left + rw] = 0
    return out


def _color_jitter(px, stream):
    lo, hi = JITTER_RANGE
    fb, fc, fs = lo + (hi - lo) * stream.uniform(3)
    x = np.clip(px.astype(np.float64) * fb, 0.0, 255.0)
    x = np.clip((x - CONTRAST_PIVOT) * fc + CONTRAST_PIVOT, 0.0, 255.0)
    luma = (x @ LUMA)[..., None]
    x = np.clip(luma + fs * (x - luma), 0.0, 255.0)
    return _to_u8(x)


def perturb(img: ImageRGB, kind: PerturbKind | str, seed: int | None = None) -> ImageRGB:
    kind = PerturbKind(kind)
    if kind.stochastic and seed is None:
        raise SeedError(f"{kind.value} requires a seed")
    if not kind.stochastic and seed is not None:
        raise SeedError(f"{kind.value} is deterministic and takes no seed")
    px = img.pixels.astype(np.float64)
    if kind is PerturbKind.HAZE:
        return ImageRGB(_to_u8((1.0 - HAZE_OPACITY) * px + HAZE_OPACITY * 255.0))
    if kind is PerturbKind.HIGHLIGHT:
        return ImageRGB(_to_u8(HIGHLIGHT_FACTOR * px))
    if kind is PerturbKind.LOWLIGHT:
        return ImageRGB(_to_u8(LOWLIGHT_FACTOR * px))
    if kind is PerturbKind.CONTRAST:
        return ImageRGB(_to_u8((px - CONTRAST_PIVOT) * CONTRAST_FACTOR + CONTRAST_PIVOT))
    stream = new_stream(seed, STREAM_OCCLUSION)
    if kind is PerturbKind.COLOR_JITTER:
        return ImageRGB(_color_jitter(img.pixels, stream))
    if min(img.width, img.height) < MIN_BOX_SIDE:
        raise ShapeError(f"{kind.value} needs an image of at least {MIN_BOX_SIDE}x{MIN_BOX_SIDE}")
    if kind is PerturbKind.OCCLUSION_BOX:
        return ImageRGB(_occlusion(img.pixels, stream))
    return ImageRGB(_patch_masking(img.pixels, stream))


def perturb_directory(src: str | os.PathLike, dst: str | os.PathLike, kind: PerturbKind | str, seed: int | None = None) -> list[Path]:
    """Perturb every ``*.ppm`` in ``src`` into ``dst/<stem>_<kind>.ppm``.

    Files are processed in sorted name order; stochastic kinds use
    ``derive_seed(seed, index)`` for the index-th file.
    """
    kind = PerturbKind(kind)
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    written = []
    for i, path in enumerate(sorted(src.glob("*.ppm"))):
        file_seed = derive_seed(seed, i) if kind.stochastic and seed is not None else seed
        out = dst / f"{path.stem}_{kind.value}.ppm"
        write_ppm(perturb(read_ppm(path), kind, file_seed), out)
        written.append(out)
    return written
