"""Two-channel pixel probability, segmentation loss and its gradient, and the
referring-segmentation metrics (IoU, oIoU, mIoU, P@X)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit

from .errors import ShapeError
from .netpbm import MaskBitmap


@dataclass(frozen=True, eq=False)
class PredictionPair:
    """Positive / negative logit maps of equal shape."""

    m_pos: np.ndarray
    m_neg: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.m_pos, dtype=np.float64)
        neg = np.asarray(self.m_neg, dtype=np.float64)
        if pos.shape != neg.shape or pos.ndim != 2:
            raise ShapeError(f"logit maps must be equal 2-D shapes, got {pos.shape} and {neg.shape}")
        if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
            raise ValueError("logits must be finite")
        object.__setattr__(self, "m_pos", pos)
        object.__setattr__(self, "m_neg", neg)

    def margin(self) -> np.ndarray:
        return self.m_pos - self.m_neg


def _labels(p: PredictionPair, y) -> np.ndarray:
    bits = y.bits if isinstance(y, MaskBitmap) else np.asarray(y)
    if bits.shape != p.m_pos.shape:
        raise ShapeError(f"labels {bits.shape} do not match predictions {p.m_pos.shape}")
    return bits.astype(np.float64)


def pixel_prob(p: PredictionPair) -> np.ndarray:
    """Per-pixel foreground probability, ``sigmoid(m_pos - m_neg)``."""
    return expit(p.margin())


def seg_loss(p: PredictionPair, y) -> float:
    """Mean binary cross-entropy, evaluated from the logit margin in log space."""
    y = _labels(p, y)
    d = p.margin()
    # log(1 - sigmoid(d)) = log(sigmoid(d)) - d
    per_pixel = (1.0 - y) * d - log_expit(d)
    # numpy's pairwise summation keeps the reduction order fixed
    return float(per_pixel.sum(dtype=np.float64)) / per_pixel.size


def seg_loss_grad(p: PredictionPair, y) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`seg_loss` with respect to ``m_pos`` and ``m_neg``."""
    y = _labels(p, y)
    g = (pixel_prob(p) - y) / y.size
    return g, -g


@dataclass(frozen=True)
class EvalSample:
    pred: MaskBitmap
    gt: MaskBitmap

    def __post_init__(self):
        if self.pred.bits.shape != self.gt.bits.shape:
            raise ShapeError(f"prediction {self.pred.bits.shape} and ground truth {self.gt.bits.shape} differ in size")

    def counts(self) -> tuple[int, int]:
        """(intersection, union) pixel counts."""
        p = self.pred.bits.astype(bool)
        g = self.gt.bits.astype(bool)
        return int(np.count_nonzero(p & g)), int(np.count_nonzero(p | g))


def iou(s: EvalSample) -> float:
    inter, union = s.counts()
    return 1.0 if union == 0 else inter / union


def _nonempty(samples):
    samples = list(samples)
    if not samples:
        raise ValueError("metrics need at least one sample")
    return samples


def oiou(samples: Sequence[EvalSample]) -> float:
    """Total intersection over total union across the corpus."""
    counts = [s.counts() for s in _nonempty(samples)]
    total_u = sum(u for _, u in counts)
    return 1.0 if total_u == 0 else sum(i for i, _ in counts) / total_u


def miou(samples: Sequence[EvalSample]) -> float:
    samples = _nonempty(samples)
    return math.fsum(iou(s) for s in samples) / len(samples)


def precision_at(samples: Sequence[EvalSample], x: float) -> float:
    """Fraction of samples whose IoU strictly exceeds ``x``."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {x}")
    samples = _nonempty(samples)
    return sum(iou(s) > x for s in samples) / len(samples)


def metrics_report(samples: Sequence[EvalSample], thresholds=(0.5, 0.7, 0.9)) -> dict[str, float]:
    """Metrics as percentages keyed ``miou``, ``oiou``, ``p@50`` ..."""
    samples = _nonempty(samples)
    out = {"miou": 100.0 * miou(samples), "oiou": 100.0 * oiou(samples)}
    for x in thresholds:
        out[f"p@{round(100 * x)}"] = 100.0 * precision_at(samples, x)
    return out


def format_report(metrics: dict[str, float]) -> str:
    return "".join(f"{k}={v:.2f}\n" for k, v in metrics.items())
