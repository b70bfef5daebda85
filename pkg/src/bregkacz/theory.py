"""Convergence diagnostics: dual objective, error-bound constants, rate bounds.

These are the quantities the solvers' guarantees are phrased in.  They are
deliberately kept separate from the solver loops so tests can evaluate
both sides of an identity through independent code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .potentials import Potential


class UndefinedConstantError(ValueError):
    """The requested constant is undefined for the given inputs."""


class BoundVacuousError(ValueError):
    """A rate factor fell outside (0, 1), so the bound carries no information."""


def dual_objective(problem, potential: Potential, y) -> float:
    """Value of the dual objective f*(A^T y) - b^T y at y."""
    y = np.asarray(y, dtype=np.float64)
    return potential.conj(problem.A.T @ y) - float(problem.b @ y)


def dual_gradient(problem, potential: Potential, y) -> np.ndarray:
    """Gradient of the dual objective, A grad f*(A^T y) - b."""
    y = np.asarray(y, dtype=np.float64)
    return problem.A @ potential.grad_conj(problem.A.T @ y) - problem.b


def duality_gap_identity(problem, potential: Potential, y, x_hat=None) -> tuple[float, float]:
    """Both sides of the distance/suboptimality identity at a dual point y.

    Returns (bregman, dual_subopt) where bregman is the Bregman distance
    between x = grad f*(A^T y) and the true solution, computed from the
    subgradient definition f(x_hat) - f(x) - <d, x_hat - x>, and
    dual_subopt is Psi(y) - Psi_hat with Psi_hat = -f(x_hat) by strong
    duality.  The two sides agree for every y; callers assert equality.
    The code paths are kept independent on purpose (the bregman side never
    evaluates the conjugate).
    """
    if x_hat is None:
        x_hat = problem.x_hat
    if x_hat is None:
        raise UndefinedConstantError("identity needs the true solution x_hat")
    y = np.asarray(y, dtype=np.float64)
    d = problem.A.T @ y
    x = potential.grad_conj(d)
    bregman = potential.value(x_hat) - potential.value(x) - float(d @ (x_hat - x))
    dual_subopt = dual_objective(problem, potential, y) + potential.value(x_hat)
    return bregman, dual_subopt


@dataclass(frozen=True)
class PlCertificate:
    """Gradient-domination constant of the dual objective with its ingredients."""

    gamma: float
    sigma_tilde_min: float
    x_hat_min_abs: float


def min_positive_singular_value(A, rank_rtol: float = 1e-10) -> float:
    """Smallest positive singular value over all nonzero column submatrices.

    Exponential in the column count; intended for small instances only.
    Singular values below rank_rtol times the submatrix's largest one are
    treated as zero.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[1]
    if n > 16:
        raise ValueError("column-subset enumeration is limited to n <= 16")
    best = math.inf
    cols = range(n)
    for size in range(1, n + 1):
        for subset in combinations(cols, size):
            sub = A[:, subset]
            svals = np.linalg.svd(sub, compute_uv=False)
            if svals[0] == 0.0:
                continue  # zero submatrix
            positive = svals[svals > rank_rtol * svals[0]]
            best = min(best, float(positive[-1]))
    if not math.isfinite(best):
        raise ValueError("matrix is identically zero")
    return best


def pl_constant_bruteforce(A, x_hat, lam: float) -> PlCertificate:
    """Error-bound constant of the dual objective for the sparse potential.

    gamma = (|x_hat|_min + 2 lam) / (|x_hat|_min * sigma_tilde_min^2) where
    sigma_tilde_min enumerates all nonzero column submatrices.  Requires a
    nonzero solution (the smallest nonzero magnitude is undefined at 0).
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    nonzero = np.abs(x_hat[x_hat != 0.0])
    if nonzero.size == 0:
        raise UndefinedConstantError("x_hat = 0 has no smallest nonzero magnitude")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x_min = float(nonzero.min())
    sigma = min_positive_singular_value(A)
    gamma = (x_min + 2.0 * lam) / (x_min * sigma * sigma)
    return PlCertificate(gamma=gamma, sigma_tilde_min=sigma, x_hat_min_abs=x_min)


def l_bar_alpha(lipschitz, alpha: float) -> float:
    """Mean of the block constants raised to alpha."""
    L = np.asarray(lipschitz, dtype=np.float64)
    return float(np.mean(L ** alpha))


def bk_rate_factor(blocks: int, gamma: float, lbar_alpha: float, lbar: float,
                   alpha: float) -> float:
    """Per-iteration contraction factor of the plain method's expected
    Bregman distance: 1 - 1 / (2 M gamma Lbar_alpha Lbar^(1-alpha))."""
    if blocks < 1 or gamma <= 0 or lbar_alpha <= 0 or lbar <= 0:
        raise ValueError("all inputs must be positive")
    factor = 1.0 - 1.0 / (2.0 * blocks * gamma * lbar_alpha * lbar ** (1.0 - alpha))
    if not 0.0 < factor < 1.0:
        raise BoundVacuousError(f"contraction factor {factor} is outside (0, 1)")
    return factor


def arbk_rate_bound(k: int, blocks: int, c0: float) -> float:
    """Accelerated method's expected Bregman distance bound at iteration k,
    4 M^2 / (k - 1 + 2M)^2 * C0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    denom = k - 1.0 + 2.0 * blocks
    return 4.0 * blocks * blocks / (denom * denom) * c0


def bk_sublinear_bound(k: int, blocks: int, lbar_alpha: float, r_squared: float) -> float:
    """Plain method's sublinear bound, 2 M Lbar_alpha / (k + 4) * R^2.

    The level-set radius R^2 has no computable general procedure and is
    supplied by the caller.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    return 2.0 * blocks * lbar_alpha / (k + 4.0) * r_squared


def weighted_alpha_norm(y, boundaries, lipschitz, alpha: float) -> float:
    """Blockwise weighted squared norm, sum_i L_i^alpha ||y_(i)||^2."""
    y = np.asarray(y, dtype=np.float64)
    boundaries = np.asarray(boundaries, dtype=np.int64)
    L = np.asarray(lipschitz, dtype=np.float64)
    total = 0.0
    for i in range(L.size):
        block = y[boundaries[i]:boundaries[i + 1]]
        total += (L[i] ** alpha) * float(block @ block)
    return total


def acceleration_c0(problem, potential: Potential, boundaries, lipschitz,
                    y_hat) -> float:
    """Constant C0 of the accelerated rate bound for zero initialization:
    (1 - 1/M) * D0 + ||y_hat||_B^2 / 2 with B the blockwise Lipschitz weights."""
    if problem.x_hat is None:
        raise UndefinedConstantError("C0 needs the true solution x_hat")
    blocks = len(lipschitz)
    d0 = potential.value(problem.x_hat)  # Bregman distance from x = 0 at d = 0
    bnorm = weighted_alpha_norm(y_hat, boundaries, lipschitz, 1.0)
    return (1.0 - 1.0 / blocks) * d0 + 0.5 * bnorm
