"""Seedable randomness: a splitmix64 stream and the block sampling distribution.

All randomness in this package flows through :class:`SplitMix64`, a
counter-based 64-bit shift/multiply generator.  Scalar and bulk draws
produce identical streams, and a seed fully determines every sequence,
so runs are bit-reproducible across platforms and process boundaries.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def _mix(v: int) -> int:
    v = ((v ^ (v >> 30)) * _MIX1) & _MASK64
    v = ((v ^ (v >> 27)) * _MIX2) & _MASK64
    return v ^ (v >> 31)


class SplitMix64:
    """Counter-based splitmix64 generator seeded by one 64-bit integer.

    The k-th output is ``mix(seed + k * GAMMA)``, which makes bulk
    generation a vectorized computation over a counter range while the
    scalar path walks the same counter one step at a time.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._count = 0

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def draws(self) -> int:
        """Number of 64-bit outputs consumed so far."""
        return self._count

    def next_uint64(self) -> int:
        self._count += 1
        return _mix((self._seed + self._count * _GAMMA) & _MASK64)

    def next_float(self) -> float:
        """One uniform double in [0, 1)."""
        return (self.next_uint64() >> 11) * _INV_2_53

    def _bulk_uint64(self, k: int) -> np.ndarray:
        counters = np.arange(self._count + 1, self._count + k + 1, dtype=np.uint64)
        self._count += k
        v = np.uint64(self._seed) + counters * np.uint64(_GAMMA)
        v = (v ^ (v >> np.uint64(30))) * np.uint64(_MIX1)
        v = (v ^ (v >> np.uint64(27))) * np.uint64(_MIX2)
        return v ^ (v >> np.uint64(31))

    def uniforms(self, k: int) -> np.ndarray:
        """k uniform doubles in [0, 1), identical to k scalar next_float calls."""
        if k < 0:
            raise ValueError("draw count must be nonnegative")
        return (self._bulk_uint64(k) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normals(self, k: int) -> np.ndarray:
        """k standard normal draws via Box-Muller on consecutive uniform pairs.

        Always consumes an even number of uniforms so the stream position
        does not depend on the parity of ``k``.
        """
        if k < 0:
            raise ValueError("draw count must be nonnegative")
        pairs = (k + 1) // 2
        u = self.uniforms(2 * pairs)
        u1 = u[0::2]
        u2 = u[1::2]
        # u1 < 1 strictly, so log1p(-u1) is finite
        r = np.sqrt(-2.0 * np.log1p(-u1))
        ang = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:k]


def block_probabilities(lipschitz, alpha: float) -> np.ndarray:
    """Sampling weights proportional to the alpha-th power of each block constant.

    ``alpha = 0`` gives uniform probabilities; ``alpha = 1`` samples each
    block proportionally to its Lipschitz constant.
    """
    L = np.asarray(lipschitz, dtype=np.float64)
    if L.ndim != 1 or L.size == 0:
        raise ValueError("lipschitz must be a nonempty 1-d array")
    if not np.all(L > 0.0):
        raise ValueError("block constants must be positive")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    w = L ** alpha
    return w / w.sum()


class BlockSampler:
    """Inverse-CDF sampler over block indices with a replayable stream.

    The scalar :meth:`sample` and the bulk :meth:`sample_many` consume the
    same underlying uniform stream and agree draw for draw.
    """

    def __init__(self, probabilities, seed: int):
        p = np.asarray(probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a nonempty 1-d array")
        if not np.all(p >= 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        self.probabilities = p
        self.cumulative = np.cumsum(p)
        self._rng = SplitMix64(seed)

    @classmethod
    def from_lipschitz(cls, lipschitz, alpha: float, seed: int) -> "BlockSampler":
        return cls(block_probabilities(lipschitz, alpha), seed)

    @property
    def blocks(self) -> int:
        return self.probabilities.size

    @property
    def seed(self) -> int:
        return self._rng.seed

    def sample(self) -> int:
        """Draw one block index: the first i with u < cumulative[i]."""
        u = self._rng.next_float()
        cum = self.cumulative
        last = cum.size - 1
        for i in range(last):
            if u < cum[i]:
                return i
        return last

    def sample_many(self, k: int) -> np.ndarray:
        """Draw k block indices at once (same stream as k scalar draws)."""
        u = self._rng.uniforms(k)
        idx = np.searchsorted(self.cumulative, u, side="right")
        return np.minimum(idx, self.blocks - 1).astype(np.int64)
