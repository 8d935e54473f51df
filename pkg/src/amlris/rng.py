"""Seedable xoshiro256** streams with Box-Muller Gaussians.

Every stochastic step draws from its own ``(seed, stream_id)`` stream so that
adding draws in one subsystem never shifts the numbers seen by another.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "STREAM_PROJECTION",
    "STREAM_DROPOUT",
    "STREAM_OCCLUSION",
    "STREAM_MONTE_CARLO",
    "RngStream",
    "new_stream",
    "derive_seed",
    "splitmix64",
]

STREAM_PROJECTION = 1
STREAM_DROPOUT = 2
STREAM_OCCLUSION = 3
STREAM_MONTE_CARLO = 4  # trial k uses STREAM_MONTE_CARLO + k

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


def splitmix64(x: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(output, new_state)``."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), x


def _mix64(x: int) -> int:
    return splitmix64(x & _MASK64)[0]


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a 64-bit seed (used for per-sample sub-seeds)."""
    h = seed & _MASK64
    for k in keys:
        h = _mix64(h ^ _mix64(k))
    return h


@numba.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def _next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True)
def _fill_u64(s, out):
    for i in range(out.shape[0]):
        out[i] = _next_u64(s)


@numba.njit(cache=True)
def _fill_uniform(s, out):
    # 53 high bits -> [0, 1)
    for i in range(out.shape[0]):
        out[i] = np.float64(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _fill_gaussian_pairs(s, out):
    # out length is even; each uniform pair yields (cos, sin) values in order
    for i in range(0, out.shape[0], 2):
        u1 = 1.0 - np.float64(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
        u2 = np.float64(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
        r = np.sqrt(-2.0 * np.log(u1))
        out[i] = r * np.cos(6.283185307179586 * u2)
        out[i + 1] = r * np.sin(6.283185307179586 * u2)


class RngStream:
    """A single-owner xoshiro256** generator.

    Gaussians come from Box-Muller over consecutive uniform pairs; the second
    value of each pair is held back and returned by the next request, so bulk
    and scalar draws interleave into the same sequence.
    """

    __slots__ = ("state", "seed", "stream_id", "_spare")

    def __init__(self, state, seed: int = 0, stream_id: int = 0):
        self.state = np.array([int(v) & _MASK64 for v in state], dtype=np.uint64)
        if self.state.shape != (4,):
            raise ValueError("xoshiro256** state has four 64-bit words")
        if not self.state.any():
            raise ValueError("xoshiro256** state must not be all zero")
        self.seed = seed
        self.stream_id = stream_id
        self._spare: float | None = None

    def next_u64(self) -> int:
        return int(_next_u64(self.state))

    def u64(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        _fill_u64(self.state, out)
        return out

    def next_uniform(self) -> float:
        return float(self.uniform(1)[0])

    def uniform(self, n: int) -> np.ndarray:
        """``n`` uniforms in [0, 1) with 53-bit resolution."""
        out = np.empty(n, dtype=np.float64)
        _fill_uniform(self.state, out)
        return out

    def next_gaussian(self, mean: float = 0.0, stddev: float = 1.0) -> float:
        return float(self.gaussian(1, mean, stddev)[0])

    def gaussian(self, n: int, mean: float = 0.0, stddev: float = 1.0) -> np.ndarray:
        if not stddev > 0:
            raise ValueError(f"stddev must be positive, got {stddev}")
        out = np.empty(n, dtype=np.float64)
        start = 0
        if n and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            start = 1
        rest = n - start
        if rest:
            buf = np.empty(rest + (rest & 1), dtype=np.float64)
            _fill_gaussian_pairs(self.state, buf)
            out[start:] = buf[:rest]
            if rest & 1:
                self._spare = float(buf[-1])
        if stddev != 1.0:
            out *= stddev
        if mean != 0.0:
            out += mean
        return out

    def integers(self, low: int, high: int, n: int | None = None):
        """Uniform integers in the closed range ``[low, high]``."""
        if high < low:
            raise ValueError("empty integer range")
        span = high - low + 1
        u = self.uniform(1 if n is None else n)
        vals = low + np.minimum(np.floor(u * span), span - 1).astype(np.int64)
        return int(vals[0]) if n is None else vals


def new_stream(seed: int, stream_id: int) -> RngStream:
    """Seed a stream from ``seed XOR mix(stream_id)`` expanded by SplitMix64."""
    x = (seed & _MASK64) ^ _mix64(stream_id)
    state = []
    for _ in range(4):
        out, x = splitmix64(x)
        state.append(out)
    return RngStream(state, seed=seed, stream_id=stream_id)
