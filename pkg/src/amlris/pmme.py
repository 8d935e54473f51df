"""PatchMax matching: per-patch alignment score between image patches and
text tokens in a shared randomly projected space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .projection import ProjectionPair, _normalize_rows64, _project64
from .tensor import as_tensor


@dataclass(frozen=True, eq=False)
class SimilarityMap:
    """Alignment heatmap over the patch grid, values in (0, 1]."""

    grid: np.ndarray

    def __post_init__(self):
        g = as_tensor(self.grid)
        if g.ndim != 2:
            raise ShapeError(f"similarity grid must be 2-D, got {g.shape}")
        object.__setattr__(self, "grid", g)

    @property
    def h_f(self) -> int:
        return self.grid.shape[0]

    @property
    def w_f(self) -> int:
        return self.grid.shape[1]


def _logits64(vp, tp) -> np.ndarray:
    vp = np.asarray(vp, dtype=np.float64)
    tp = np.asarray(tp, dtype=np.float64)
    if vp.ndim != 2 or tp.ndim != 2 or vp.shape[1] != tp.shape[1]:
        raise ShapeError(f"cannot compare {vp.shape} patches with {tp.shape} tokens")
    return vp @ tp.T


def similarity_logits(vp, tp) -> np.ndarray:
    """Patch-token dot products, [patches, d_a] x [tokens, d_a] -> [patches, tokens]."""
    return as_tensor(_logits64(vp, tp))


def _softmax64(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def row_softmax(logits) -> np.ndarray:
    logits = np.asarray(logits)
    if logits.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {logits.shape}")
    return as_tensor(_softmax64(logits))


def _patch_max64(probs, h_f, w_f) -> np.ndarray:
    probs = np.asarray(probs)
    if probs.ndim != 2 or probs.shape[0] != h_f * w_f:
        raise ShapeError(f"{probs.shape[0] if probs.ndim else 0} rows do not form a {h_f}x{w_f} grid")
    # row m is patch (m // w_f, m % w_f)
    return probs.max(axis=1).reshape(h_f, w_f)


def patch_max(probs, h_f: int, w_f: int) -> SimilarityMap:
    return SimilarityMap(_patch_max64(probs, h_f, w_f))


def pmme(v_enc, t_enc, proj: ProjectionPair, h_f: int, w_f: int) -> SimilarityMap:
    """Normalize, project both modalities, softmax over tokens, keep each
    patch's best token."""
    v_enc = np.asarray(v_enc)
    t_enc = np.asarray(t_enc)
    if v_enc.ndim != 2 or v_enc.shape != (h_f * w_f, proj.d_i):
        raise ShapeError(f"visual features {v_enc.shape} != ({h_f * w_f}, {proj.d_i})")
    if t_enc.ndim != 2 or t_enc.shape[1] != proj.d_t:
        raise ShapeError(f"text features {t_enc.shape} do not have {proj.d_t} columns")
    vp = _project64(_normalize_rows64(v_enc), proj.w_i)
    tp = _project64(_normalize_rows64(t_enc), proj.w_t)
    return SimilarityMap(_patch_max64(_softmax64(_logits64(vp, tp)), h_f, w_f))
