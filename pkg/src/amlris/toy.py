"""Desk-scale two-stage masked training on synthetic referring data.

Each sample is a noisy image holding a target square and a distractor square
of another colour; the "expression" is a handful of token vectors (target
colour, target quadrant, noise). Frozen encoders feed PMME + AFM in stage 1,
and a linear two-channel head is trained by SGD on the masked image in
stage 2.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .afm import AmlConfig, BlockMask, afm, upsample_matrix
from .loss import PredictionPair, seg_loss, seg_loss_grad
from .netpbm import ImageRGB, MaskBitmap
from .pmme import SimilarityMap, pmme
from .projection import ProjectionPair, sample_projection
from .rng import derive_seed, new_stream
from .tensor import as_tensor

IMAGE_SIZE = 112
GRID = 8
N_TOKENS = 4
D_I = 32
SQUARE_SIDE = (20, 36)
BACKGROUND_MAX = 60
PALETTE = np.array(
    [[220, 40, 40], [40, 200, 60], [40, 70, 220], [230, 210, 40]], dtype=np.uint8
)
ENCODER_SEED = 0x5EED_70C4
N_STATS = 6  # mean RGB, patch centre (row, col), bias
QUADRANT_CENTRES = ((-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5))

TOY_CONFIG = AmlConfig(block_h=8, block_w=8, d_a=256, grid_h=GRID, grid_w=GRID)


@dataclass(frozen=True, eq=False)
class ToySample:
    image: ImageRGB
    tokens: np.ndarray
    gt: MaskBitmap
    target_color: int
    distractor_color: int


def frozen_encoder(seed: int = ENCODER_SEED, d_i: int = D_I) -> np.ndarray:
    """Random linear map from patch statistics to visual features."""
    enc = new_stream(seed, 0).gaussian(N_STATS * d_i, 0.0, 1.0 / math.sqrt(N_STATS))
    return enc.reshape(N_STATS, d_i)


def vocabulary(encoder: np.ndarray | None = None) -> np.ndarray:
    """Token table in the visual feature space: the encoding of a flat patch
    of each palette colour, then of a black patch at each quadrant centre."""
    enc = frozen_encoder() if encoder is None else encoder
    stats = [[*(c / 255.0), 0.0, 0.0, 1.0] for c in PALETTE]
    stats += [[0.0, 0.0, 0.0, r, c, 1.0] for r, c in QUADRANT_CENTRES]
    return np.asarray(stats) @ enc


def _overlaps(a, b) -> bool:
    (ta, la, sa), (tb, lb, sb) = a, b
    return ta < tb + sb and tb < ta + sa and la < lb + sb and lb < la + sa


def _quadrant(top, left, side, size) -> int:
    half = size / 2.0
    return 2 * int(top + side / 2.0 >= half) + int(left + side / 2.0 >= half)


def synth_sample(seed: int, size: int = IMAGE_SIZE, n_tokens: int = N_TOKENS, encoder: np.ndarray | None = None) -> ToySample:
    if n_tokens < 2:
        raise ValueError("need at least the colour and quadrant tokens")
    s = new_stream(seed, 0)
    px = s.integers(0, BACKGROUND_MAX, size * size * 3).astype(np.uint8).reshape(size, size, 3)
    target, distractor = (int(c) for c in s.integers(0, len(PALETTE) - 1, 2))
    if distractor == target:
        distractor = (target + 1) % len(PALETTE)

    def place():
        side = s.integers(*SQUARE_SIDE)
        return s.integers(0, size - side), s.integers(0, size - side), side

    box_t = place()
    box_d = place()
    while _overlaps(box_t, box_d):
        box_d = place()
    gt = np.zeros((size, size), dtype=np.uint8)
    for (top, left, side), colour in ((box_d, distractor), (box_t, target)):
        px[top : top + side, left : left + side] = PALETTE[colour]
    top, left, side = box_t
    gt[top : top + side, left : left + side] = 1

    vocab = vocabulary(encoder)
    d_t = vocab.shape[1]
    tokens = np.empty((n_tokens, d_t))
    tokens[0] = vocab[target]
    tokens[1] = vocab[len(PALETTE) + _quadrant(top, left, side, size)]
    if n_tokens > 2:
        tokens[2:] = s.gaussian((n_tokens - 2) * d_t).reshape(n_tokens - 2, d_t)
    return ToySample(ImageRGB(px), as_tensor(tokens), MaskBitmap(gt), target, distractor)


def synth_dataset(seed: int, n: int, **kwargs) -> list[ToySample]:
    if n < 1:
        raise ValueError("n must be >= 1")
    if kwargs.get("encoder") is None:
        kwargs["encoder"] = frozen_encoder()
    return [synth_sample(derive_seed(seed, i), **kwargs) for i in range(n)]


class ToyModel:
    """Frozen random patch encoder, pass-through text encoder, and a
    trainable linear head ``theta = (w_pos, w_neg)``.

    The head maps each patch's ``[visual feature; mean token; 1]`` to a
    positive and a negative logit; logit grids are bilinearly upsampled to
    pixels.
    """

    def __init__(self, encoder: np.ndarray, d_t: int, grid: int = GRID, image_size: int = IMAGE_SIZE):
        if image_size % grid:
            raise ValueError("image size must be a multiple of the patch grid")
        self.encoder = encoder
        self.encoder.setflags(write=False)
        self.grid = grid
        self.image_size = image_size
        self.d_i = encoder.shape[1]
        self.d_t = d_t
        n_in = self.d_i + d_t + 1
        self.w_pos = np.zeros(n_in)
        self.w_neg = np.zeros(n_in)
        self._up = upsample_matrix(grid, image_size)
        p = image_size // grid
        self._pool = np.kron(np.eye(grid), np.full((1, p), 1.0 / p))

        r = (np.arange(grid) + 0.5) / grid * 2.0 - 1.0
        rows, cols = np.meshgrid(r, r, indexing="ij")
        self._pos = np.stack([rows.ravel(), cols.ravel()], axis=1)

    @classmethod
    def create(cls, encoder_seed: int = ENCODER_SEED, d_i: int = D_I, d_t: int | None = None, grid: int = GRID, image_size: int = IMAGE_SIZE) -> "ToyModel":
        return cls(frozen_encoder(encoder_seed, d_i), d_i if d_t is None else d_t, grid, image_size)

    def patch_stats(self, img: ImageRGB) -> np.ndarray:
        g = self.grid
        if (img.height, img.width) != (self.image_size, self.image_size):
            raise ValueError(f"model expects {self.image_size}x{self.image_size} images")
        planes = np.ascontiguousarray(img.pixels.transpose(2, 0, 1), dtype=np.float64)
        means = (self._pool @ planes @ self._pool.T).reshape(3, g * g).T / 255.0
        return np.hstack([means, self._pos, np.ones((g * g, 1))])

    def encode_image(self, img: ImageRGB) -> np.ndarray:
        return self.patch_stats(img) @ self.encoder

    def encode_text(self, tokens) -> np.ndarray:
        return np.asarray(tokens, dtype=np.float64)

    def head_inputs(self, img: ImageRGB, tokens) -> np.ndarray:
        v = self.encode_image(img)
        pooled = np.broadcast_to(self.encode_text(tokens).mean(axis=0), (len(v), self.d_t))
        return np.hstack([v, pooled, np.ones((len(v), 1))])

    def _upsample(self, grid_logits):
        return self._up @ grid_logits.reshape(self.grid, self.grid) @ self._up.T

    def forward(self, img: ImageRGB, tokens, theta=None) -> PredictionPair:
        w_pos, w_neg = (self.w_pos, self.w_neg) if theta is None else theta
        x = self.head_inputs(img, tokens)
        return PredictionPair(self._upsample(x @ w_pos), self._upsample(x @ w_neg))

    def loss_and_grad(self, img: ImageRGB, tokens, gt: MaskBitmap):
        """Segmentation loss and its gradient with respect to ``(w_pos, w_neg)``."""
        x = self.head_inputs(img, tokens)
        pred = PredictionPair(self._upsample(x @ self.w_pos), self._upsample(x @ self.w_neg))
        g_pos, g_neg = seg_loss_grad(pred, gt)
        # transpose of the upsampling, then of the per-patch linear map
        back_pos = (self._up.T @ g_pos @ self._up).ravel()
        back_neg = (self._up.T @ g_neg @ self._up).ravel()
        return seg_loss(pred, gt), (x.T @ back_pos, x.T @ back_neg)

    def theta_checksum(self) -> str:
        return hashlib.sha256(self.w_pos.tobytes() + self.w_neg.tobytes()).hexdigest()


def stage1_mask(s: ToySample, model: ToyModel, proj: ProjectionPair, cfg: AmlConfig) -> tuple[ImageRGB, BlockMask, SimilarityMap]:
    """Forward-only masking stage: frozen encoders, PMME, AFM."""
    before = model.theta_checksum()
    sim = pmme(model.encode_image(s.image), model.encode_text(s.tokens), proj, model.grid, model.grid)
    masked, mask = afm(sim, s.image, cfg)
    assert model.theta_checksum() == before, "stage 1 must not touch the head"
    return masked, mask, sim


def stage2_step(masked: ImageRGB, s: ToySample, model: ToyModel, lr: float) -> float:
    """One SGD step of the head on the masked image; returns the pre-step loss."""
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    loss, (d_pos, d_neg) = model.loss_and_grad(masked, s.tokens, s.gt)
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite segmentation loss")
    if lr:
        model.w_pos = model.w_pos - lr * d_pos
        model.w_neg = model.w_neg - lr * d_neg
    return loss


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    masked_fraction: list[float] = field(default_factory=list)
    mean_s: list[float] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loss)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "masked_fraction", "mean_S"])
        for i, row in enumerate(zip(self.loss, self.masked_fraction, self.mean_s), start=1):
            w.writerow([i] + [repr(float(v)) for v in row])
        return buf.getvalue()


DEFAULT_LR = 0.5


def train(data: list[ToySample], epochs: int, cfg: AmlConfig = TOY_CONFIG, lr: float | None = None, seed: int = 0, model: ToyModel | None = None) -> TrainHistory:
    """Two-stage loop over ``data`` in fixed order for ``epochs`` epochs.

    The dropout seed for sample ``i`` in epoch ``e`` is
    ``derive_seed(cfg.seed, e, i)``.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    lr = DEFAULT_LR if lr is None else lr
    if model is None:
        model = ToyModel.create(d_t=data[0].tokens.shape[1])
    proj = sample_projection(seed, model.d_i, model.d_t, cfg.d_a)
    hist = TrainHistory()
    for epoch in range(epochs):
        losses, fracs, means = [], [], []
        for i, s in enumerate(data):
            step_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, epoch, i))
            masked, mask, sim = stage1_mask(s, model, proj, step_cfg)
            losses.append(stage2_step(masked, s, model, lr))
            fracs.append(mask.masked_fraction)
            means.append(float(sim.grid.astype(np.float64).mean()))
        hist.step_losses.extend(losses)
        hist.loss.append(math.fsum(losses) / len(losses))
        hist.masked_fraction.append(math.fsum(fracs) / len(fracs))
        hist.mean_s.append(math.fsum(means) / len(means))
    return hist


def train_baseline(data: list[ToySample], epochs: int, lr: float | None = None) -> TrainHistory:
    """Single-stage reference loop on the raw images (no masking stage)."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    lr = DEFAULT_LR if lr is None else lr
    model = ToyModel.create(d_t=data[0].tokens.shape[1])
    hist = TrainHistory()
    for _ in range(epochs):
        losses = [stage2_step(s.image, s, model, lr) for s in data]
        hist.step_losses.extend(losses)
        hist.loss.append(math.fsum(losses) / len(losses))
        hist.masked_fraction.append(0.0)
        hist.mean_s.append(float("nan"))
    return hist
