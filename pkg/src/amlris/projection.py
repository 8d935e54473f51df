"""Gaussian random projection into a shared space, plus JL-style bound
calculators and Monte Carlo verifiers for them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeError
from .rng import STREAM_MONTE_CARLO, STREAM_PROJECTION, new_stream
from .tensor import as_tensor

_NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Fixed Gaussian maps ``w_i`` [d_i, d_a] and ``w_t`` [d_t, d_a]."""

    w_i: np.ndarray
    w_t: np.ndarray
    seed: int

    @property
    def d_i(self) -> int:
        return self.w_i.shape[0]

    @property
    def d_t(self) -> int:
        return self.w_t.shape[0]

    @property
    def d_a(self) -> int:
        return self.w_i.shape[1]


@dataclass(frozen=True)
class DistortionReport:
    trials: int
    epsilon_target: float
    violation_rate: float
    max_abs_error: float
    mean_abs_error: float
    mean_value: float = float("nan")
    analytic_bound: float = float("nan")
    std_error: float = float("nan")

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, float):
                value = "nan" if math.isnan(value) else repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def _normalize_rows64(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", m, m))
    out = np.zeros_like(m)
    ok = norms >= _NORM_FLOOR
    out[ok] = m[ok] / norms[ok, None]
    return out


def l2_normalize_rows(m) -> np.ndarray:
    """Scale each row to unit L2 norm; rows with norm < 1e-12 become zeros."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {m.shape}")
    return as_tensor(_normalize_rows64(m))


def sample_projection(seed: int, d_i: int, d_t: int, d_a: int) -> ProjectionPair:
    """Draw ``w_i`` then ``w_t`` i.i.d. N(0, 1/d_a) from the projection stream."""
    for name, d in (("d_i", d_i), ("d_t", d_t), ("d_a", d_a)):
        if d < 1:
            raise ValueError(f"{name} must be >= 1, got {d}")
    stream = new_stream(seed, STREAM_PROJECTION)
    std = 1.0 / math.sqrt(d_a)
    w_i = stream.gaussian(d_i * d_a, 0.0, std).reshape(d_i, d_a)
    w_t = stream.gaussian(d_t * d_a, 0.0, std).reshape(d_t, d_a)
    return ProjectionPair(as_tensor(w_i), as_tensor(w_t), seed)


def _project64(normed, w) -> np.ndarray:
    normed = np.asarray(normed, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if normed.ndim != 2 or w.ndim != 2:
        raise ShapeError("project expects two matrices")
    if normed.shape[1] != w.shape[0]:
        raise ShapeError(f"inner dimensions differ: {normed.shape} x {w.shape}")
    return normed @ w


def project(normed, w) -> np.ndarray:
    """Row vectors times ``w`` ([rows, d] x [d, d_a] -> [rows, d_a])."""
    return as_tensor(_project64(normed, w))


def _check_unit_interval(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def _check_counts(m, n):
    if m < 1 or n < 1:
        raise ValueError(f"M and N must be >= 1, got M={m}, N={n}")


def _jl_dim_real(m, n, sigma, epsilon) -> float:
    return 8.0 * math.log(m * n / sigma) / epsilon**2


def jl_dim_bound(m: int, n: int, sigma: float, epsilon: float) -> int:
    """Smallest projection dimension with ``d_a >= 8 ln(MN/sigma) / eps^2``."""
    _check_counts(m, n)
    _check_unit_interval("sigma", sigma)
    _check_unit_interval("epsilon", epsilon)
    return math.ceil(_jl_dim_real(m, n, sigma, epsilon))


def jl_epsilon(d_a: int, m: int, n: int, sigma: float) -> float:
    """Distortion guaranteed at dimension ``d_a``: ``sqrt(8 ln(MN/sigma) / d_a)``."""
    if d_a < 1:
        raise ValueError(f"d_a must be >= 1, got {d_a}")
    _check_counts(m, n)
    _check_unit_interval("sigma", sigma)
    return math.sqrt(8.0 * math.log(m * n / sigma) / d_a)


def chi2_tail_bound(d: int, epsilon: float) -> float:
    """``min(1, 2 exp(-d eps^2 / 8))``, the two-sided chi-square tail bound."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    _check_unit_interval("epsilon", epsilon)
    return min(1.0, 2.0 * math.exp(-d * epsilon**2 / 8.0))


def _check_trials(trials):
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")


def _unit(stream, dim) -> np.ndarray:
    x = stream.gaussian(dim)
    return x / np.linalg.norm(x)


def block_distance_distortion(w_i, w_t, z, z_prime) -> float:
    """Relative squared-distance error of the block-diagonal map on one pair.

    ``z`` and ``z_prime`` are concatenations ``[visual; text]``. The 1/sqrt(2)
    block scaling is applied to the reference distance as well, so the
    returned value is ``||W~(z - z')||^2 / ||(z - z')/sqrt(2)||^2 - 1``.
    Identical inputs give 0.
    """
    w_i = np.asarray(w_i, dtype=np.float64)
    w_t = np.asarray(w_t, dtype=np.float64)
    delta = np.asarray(z, dtype=np.float64) - np.asarray(z_prime, dtype=np.float64)
    d_i = w_i.shape[0]
    if delta.shape != (d_i + w_t.shape[0],):
        raise ShapeError(f"concatenated vectors must have length {d_i + w_t.shape[0]}")
    a, b = delta[:d_i], delta[d_i:]
    ref = 0.5 * (a @ a + b @ b)
    if ref == 0.0:
        return 0.0
    pa, pb = a @ w_i, b @ w_t
    return 0.5 * (pa @ pa + pb @ pb) / ref - 1.0


def _summarize(errors, epsilon, violations, **extra) -> DistortionReport:
    abs_err = np.abs(errors)
    return DistortionReport(
        trials=len(errors),
        epsilon_target=float(epsilon),
        violation_rate=violations / len(errors),
        max_abs_error=float(abs_err.max()),
        mean_abs_error=math.fsum(abs_err) / len(errors),
        **extra,
    )


def block_distance_errors(seed: int, trials: int, d_i: int, d_t: int, d_a: int) -> np.ndarray:
    """Relative squared-distance errors of the block-diagonal map, one per
    trial, each on two fresh random pairs of unit vectors.

    Each trial draws its own vectors and its own ``(w_i, w_t)`` from stream
    ``STREAM_MONTE_CARLO + trial``.
    """
    _check_trials(trials)
    std = 1.0 / math.sqrt(d_a)
    errors = np.empty(trials)
    for k in range(trials):
        s = new_stream(seed, STREAM_MONTE_CARLO + k)
        z = np.concatenate([_unit(s, d_i), _unit(s, d_t)])
        z_prime = np.concatenate([_unit(s, d_i), _unit(s, d_t)])
        w_i = s.gaussian(d_i * d_a, 0.0, std).reshape(d_i, d_a)
        w_t = s.gaussian(d_t * d_a, 0.0, std).reshape(d_t, d_a)
        errors[k] = block_distance_distortion(w_i, w_t, z, z_prime)
    return errors


def mc_block_distance_distortion(
    seed: int, trials: int, d_i: int, d_t: int, d_a: int, epsilon: float
) -> DistortionReport:
    """Empirical rate at which the block-diagonal map leaves the (1 +/- eps)
    squared-distance sandwich."""
    _check_unit_interval("epsilon", epsilon)
    errors = block_distance_errors(seed, trials, d_i, d_t, d_a)
    violations = int(np.count_nonzero(np.abs(errors) > epsilon))
    return _summarize(errors, epsilon, violations, mean_value=float(np.mean(errors + 1.0)))


def _padded_inner(v, u) -> float:
    k = min(len(v), len(u))
    return float(v[:k] @ u[:k])


def cross_inner_errors(seed: int, trials: int, v, u, d_a: int) -> np.ndarray:
    """Signed errors ``<v W_i, u W_t> - <v, u>`` for fixed ``v``, ``u`` over
    independent draws of the two projection blocks.

    ``<v, u>`` is taken after zero-padding both to the larger dimension.
    """
    _check_trials(trials)
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    target = _padded_inner(v, u)
    std = 1.0 / math.sqrt(d_a)
    out = np.empty(trials)
    for k in range(trials):
        s = new_stream(seed, STREAM_MONTE_CARLO + k)
        w_i = s.gaussian(len(v) * d_a, 0.0, std).reshape(len(v), d_a)
        w_t = s.gaussian(len(u) * d_a, 0.0, std).reshape(len(u), d_a)
        out[k] = (v @ w_i) @ (u @ w_t) - target
    return out


def random_cross_inner_errors(seed: int, trials: int, d_i: int, d_t: int, d_a: int) -> np.ndarray:
    """Signed cross-modal inner-product errors for fresh random unit vectors
    and fresh projection blocks in every trial."""
    _check_trials(trials)
    std = 1.0 / math.sqrt(d_a)
    errors = np.empty(trials)
    for k in range(trials):
        s = new_stream(seed, STREAM_MONTE_CARLO + k)
        v = _unit(s, d_i)
        u = _unit(s, d_t)
        w_i = s.gaussian(d_i * d_a, 0.0, std).reshape(d_i, d_a)
        w_t = s.gaussian(d_t * d_a, 0.0, std).reshape(d_t, d_a)
        errors[k] = (v @ w_i) @ (u @ w_t) - _padded_inner(v, u)
    return errors


def mc_cross_inner_error(
    seed: int, trials: int, d_i: int, d_t: int, d_a: int, epsilon: float | None = None
) -> DistortionReport:
    """Measure the raw cross-modal inner-product error.

    This is a measurement only: with independent blocks the projected inner
    product has mean zero, so no pass/fail is implied. When ``epsilon`` is
    given, ``violation_rate`` counts errors above it.
    """
    errors = random_cross_inner_errors(seed, trials, d_i, d_t, d_a)
    if epsilon is None:
        return _summarize(errors, float("nan"), 0, mean_value=float(np.mean(errors)))
    violations = int(np.count_nonzero(np.abs(errors) > epsilon))
    return _summarize(errors, epsilon, violations, mean_value=float(np.mean(errors)))


def chi2_projection_samples(seed: int, trials: int, d: int, w) -> np.ndarray:
    """``||W w||^2`` per trial with ``W`` in R^{d x p}, entries N(0, 1/d)."""
    _check_trials(trials)
    w = np.asarray(w, dtype=np.float64).ravel()
    std = 1.0 / math.sqrt(d)
    out = np.empty(trials)
    for k in range(trials):
        s = new_stream(seed, STREAM_MONTE_CARLO + k)
        proj = s.gaussian(d * len(w), 0.0, std).reshape(d, len(w)) @ w
        out[k] = proj @ proj
    return out


def chi2_ratio_errors(seed: int, trials: int, d: int, w=None) -> np.ndarray:
    """``||Ww||^2 / ||w||^2 - 1`` per trial; ``w`` defaults to ``(1, 1)/sqrt(2)``."""
    if w is None:
        w = np.full(2, 1.0 / math.sqrt(2.0))
    w = np.asarray(w, dtype=np.float64)
    scale = float(w @ w)
    if scale == 0.0:
        raise ValueError("w must be nonzero")
    return chi2_projection_samples(seed, trials, d, w) / scale - 1.0


def mc_chi2_tail(seed: int, trials: int, d: int, epsilon: float, w=None) -> DistortionReport:
    """Empirical two-sided tail ``Pr[| ||Ww||^2/||w||^2 - 1 | >= eps]``.

    ``violation_rate`` is the empirical tail, ``analytic_bound`` the
    ``2 exp(-d eps^2/8)`` bound and ``std_error`` the binomial standard
    error of the empirical tail.
    """
    bound = chi2_tail_bound(d, epsilon)
    errors = chi2_ratio_errors(seed, trials, d, w)
    violations = int(np.count_nonzero(np.abs(errors) >= epsilon))
    rate = violations / trials
    return _summarize(
        errors,
        epsilon,
        violations,
        mean_value=math.fsum(errors + 1.0) / trials,
        analytic_bound=bound,
        std_error=math.sqrt(max(rate * (1.0 - rate), 0.0) / trials),
    )
