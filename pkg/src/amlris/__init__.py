"""Alignment-aware masked learning for referring image segmentation."""

from .afm import AmlConfig, BlockMask, PixelSet, afm, apply_mask, bilinear_upsample, block_aggregate, dropout_select, weak_pixels
from .loss import EvalSample, PredictionPair, iou, miou, oiou, pixel_prob, precision_at, seg_loss, seg_loss_grad
from .netpbm import ImageRGB, MaskBitmap, read_pgm, read_ppm, write_pgm, write_ppm
from .perturb import PerturbKind, perturb
from .pmme import SimilarityMap, patch_max, pmme, row_softmax, similarity_logits
from .projection import (
    DistortionReport,
    ProjectionPair,
    chi2_tail_bound,
    jl_dim_bound,
    jl_epsilon,
    l2_normalize_rows,
    mc_block_distance_distortion,
    mc_chi2_tail,
    mc_cross_inner_error,
    project,
    sample_projection,
)
from .rng import RngStream, new_stream
from .tensor import read_tensor, write_tensor

__version__ = "0.1.0"
