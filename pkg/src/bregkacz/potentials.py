"""Strongly convex potentials through the only interface the solvers need.

Every potential f here is 1-strongly convex, so its conjugate f* is
differentiable with a 1-Lipschitz gradient.  The solvers never touch
subdifferentials directly: a dual vector d is turned into a primal point
via x = grad_conj(d), and distances are measured with the Bregman
distance of f at that pair.
"""

from __future__ import annotations

import numpy as np


def soft_shrinkage(x, threshold: float) -> np.ndarray:
    """Componentwise shrink toward zero: max(|x_j| - threshold, 0) * sign(x_j)."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


class Potential:
    """Base interface: value, conjugate value, conjugate gradient, Bregman distance.

    Subclasses fill in ``value``, ``conj`` and ``grad_conj`` plus the
    dispatch attributes ``mode``/``lam``/``group_boundaries`` used by the
    compiled solver kernels.
    """

    mode: int
    lam: float
    group_boundaries: np.ndarray

    def value(self, x) -> float:
        raise NotImplementedError

    def conj(self, d) -> float:
        raise NotImplementedError

    def grad_conj(self, d) -> np.ndarray:
        raise NotImplementedError

    def bregman(self, d, y) -> float:
        """Bregman distance between x = grad_conj(d) and y, measured at d.

        Uses the conjugate form f*(d) - <d, y> + f(y); tiny negative values
        from round-off (the quantity is provably nonnegative) are clamped
        to zero.
        """
        d = np.asarray(d, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        v = self.conj(d) - float(d @ y) + self.value(y)
        return v if v > 0.0 else 0.0

    def label(self) -> str:
        raise NotImplementedError


class SquaredNorm(Potential):
    """f(x) = ||x||^2 / 2; the conjugate gradient is the identity."""

    mode = 0
    lam = 0.0
    group_boundaries = np.zeros(0, dtype=np.int64)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * float(x @ x)

    def conj(self, d) -> float:
        d = np.asarray(d, dtype=np.float64)
        return 0.5 * float(d @ d)

    def grad_conj(self, d) -> np.ndarray:
        return np.array(d, dtype=np.float64, copy=True)

    def label(self) -> str:
        return "squared-norm"


class Sparse(Potential):
    """f(x) = lam * ||x||_1 + ||x||^2 / 2, the sparsity-promoting potential.

    Conjugate pair: f*(d) = ||S_lam(d)||^2 / 2 and grad f*(d) = S_lam(d)
    with S the soft shrinkage.
    """

    mode = 1
    group_boundaries = np.zeros(0, dtype=np.int64)

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.lam = float(lam)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.lam * float(np.abs(x).sum()) + 0.5 * float(x @ x)

    def conj(self, d) -> float:
        s = soft_shrinkage(d, self.lam)
        return 0.5 * float(s @ s)

    def grad_conj(self, d) -> np.ndarray:
        return soft_shrinkage(d, self.lam)

    def label(self) -> str:
        return f"sparse(lam={self.lam:g})"


class GroupSparse(Potential):
    """f(x) = lam * sum_g ||x_g||_2 + ||x||^2 / 2 over contiguous coordinate groups.

    The conjugate acts groupwise: f*(d) = sum_g max(||d_g|| - lam, 0)^2 / 2,
    and the conjugate gradient shrinks each group radially,
    d_g * max(||d_g|| - lam, 0) / ||d_g||.  (Derived via the Moreau identity
    from the groupwise proximal map; cross-checked numerically in the tests.)
    """

    mode = 2

    def __init__(self, lam: float, group_boundaries):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        g = np.asarray(group_boundaries, dtype=np.int64)
        if g.ndim != 1 or g.size < 2 or g[0] != 0 or np.any(np.diff(g) < 1):
            raise ValueError("group boundaries must start at 0 and strictly increase")
        self.lam = float(lam)
        self.group_boundaries = g

    @property
    def dim(self) -> int:
        return int(self.group_boundaries[-1])

    def _check(self, v: np.ndarray) -> None:
        if v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape[0]} does not match group partition ({self.dim})")

    def _group_norms(self, v: np.ndarray) -> np.ndarray:
        g = self.group_boundaries
        return np.sqrt(np.add.reduceat(v * v, g[:-1]))

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        return self.lam * float(self._group_norms(x).sum()) + 0.5 * float(x @ x)

    def conj(self, d) -> float:
        d = np.asarray(d, dtype=np.float64)
        self._check(d)
        shrunk = np.maximum(self._group_norms(d) - self.lam, 0.0)
        return 0.5 * float(shrunk @ shrunk)

    def grad_conj(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        self._check(d)
        norms = self._group_norms(d)
        scale = np.zeros_like(norms)
        active = norms > self.lam
        scale[active] = (norms[active] - self.lam) / norms[active]
        return d * np.repeat(scale, np.diff(self.group_boundaries))

    def label(self) -> str:
        return f"group-sparse(lam={self.lam:g}, groups={self.group_boundaries.size - 1})"


def bregman_distance(potential: Potential, d, y) -> float:
    """Functional form of :meth:`Potential.bregman`."""
    return potential.bregman(d, y)
