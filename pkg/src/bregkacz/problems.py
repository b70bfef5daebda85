"""Synthetic problem generation, experiment metrics, and problem file I/O.

Generated instances follow the standard recipe for sparse recovery
benchmarks: a dense standard-normal matrix, a ground truth obtained by
shrinking A^T y for a normal y (so it satisfies the optimality system of
the sparse potential by construction), and the consistent right-hand side
b = A x_hat.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .linops import (MatrixFileError, read_matrix_market, read_vector,
                     validate_matrix, write_matrix_market, write_vector)
from .potentials import Potential, Sparse, SquaredNorm


class MetricUnavailableError(ValueError):
    """A metric was requested that the instance cannot provide."""


_KAPPA_MAX_ELEMENTS = 2_000_000


@dataclass
class ProblemInstance:
    """A consistent linear system with optional generation metadata."""

    A: np.ndarray
    b: np.ndarray
    x_hat: np.ndarray | None = None
    lambda_gen: float | None = None
    seed: int | None = None
    kappa: float | None = None

    def __post_init__(self):
        self.A = validate_matrix(self.A)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.b.shape != (self.A.shape[0],):
            raise ValueError("right-hand side does not match the matrix row count")
        if self.x_hat is not None:
            self.x_hat = np.ascontiguousarray(self.x_hat, dtype=np.float64)
            if self.x_hat.shape != (self.A.shape[1],):
                raise ValueError("ground truth does not match the matrix column count")
            gap = float(np.linalg.norm(self.A @ self.x_hat - self.b))
            if gap > 1e-10 * (1.0 + float(np.linalg.norm(self.b))):
                raise ValueError(f"inconsistent instance: ||A x_hat - b|| = {gap:.3e}")
            if np.any(self.x_hat) and not np.any(self.b):
                raise ValueError("nonzero x_hat cannot come with b = 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def _condition_number(A: np.ndarray) -> float | None:
    if A.size > _KAPPA_MAX_ELEMENTS:
        return None
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else None


def generate_for_potential(m: int, n: int, potential: Potential, seed: int,
                           lambda_gen: float | None = None,
                           with_certificate: bool = False,
                           compute_kappa: bool = True):
    """Random consistent instance whose f-minimal solution is known.

    Draws A with iid standard-normal entries and a normal dual vector y,
    sets x_hat = grad f*(A^T y) and b = A x_hat, so (x_hat, y) satisfy the
    optimality system exactly and x_hat is the potential's minimizer over
    the solution set.  y is redrawn (up to a cap) whenever the shrinkage
    wipes x_hat out entirely.

    With ``with_certificate`` the returned value is ``(instance, y)``; the
    dual vector is a valid dual solution and is what rate-bound constants
    should be evaluated with.
    """
    from .sampling import SplitMix64

    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    stream = SplitMix64(seed)
    A = stream.normals(m * n).reshape(m, n)
    y = None
    x_hat = None
    for _ in range(64):
        cand = stream.normals(m)
        x_cand = potential.grad_conj(A.T @ cand)
        if np.any(x_cand):
            y, x_hat = cand, x_cand
            break
    if y is None:
        raise ValueError("could not draw a nonzero ground truth; "
                         "the shrinkage threshold is too aggressive for this size")
    b = A @ x_hat
    instance = ProblemInstance(A=A, b=b, x_hat=x_hat, lambda_gen=lambda_gen,
                               seed=seed,
                               kappa=_condition_number(A) if compute_kappa else None)
    if with_certificate:
        return instance, y
    return instance


def generate_gaussian(m: int, n: int, lam: float, seed: int,
                      with_certificate: bool = False, compute_kappa: bool = True):
    """Standard synthetic instance for the sparse potential.

    x_hat = S_lam(A^T y) with A and y standard normal, b = A x_hat.
    ``lam = 0`` yields a dense ground truth (no shrinkage).
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    potential = Sparse(lam) if lam > 0 else SquaredNorm()
    return generate_for_potential(m, n, potential, seed, lambda_gen=float(lam),
                                  with_certificate=with_certificate,
                                  compute_kappa=compute_kappa)


def relative_residual(problem: ProblemInstance, x) -> float:
    """||A x - b|| / ||b||; falls back to the absolute residual when b = 0."""
    x = np.asarray(x, dtype=np.float64)
    res = float(np.linalg.norm(problem.A @ x - problem.b))
    norm_b = float(np.linalg.norm(problem.b))
    return res / norm_b if norm_b > 0 else res


def relative_error(problem: ProblemInstance, x) -> float:
    """||x - x_hat|| / ||x_hat||; needs a known nonzero ground truth."""
    if problem.x_hat is None:
        raise MetricUnavailableError("instance has no ground truth")
    norm_x = float(np.linalg.norm(problem.x_hat))
    if norm_x == 0:
        raise MetricUnavailableError("relative error undefined for x_hat = 0")
    x = np.asarray(x, dtype=np.float64)
    return float(np.linalg.norm(x - problem.x_hat)) / norm_x


# --- problem directories ------------------------------------------------------
#
# A problem is a directory: matrix.mtx (MatrixMarket), rhs.txt, optional
# ground_truth.txt, and meta.txt with key=value lines.  All numbers are
# written with 17 significant digits so doubles survive the round trip.

_MATRIX_FILE = "matrix.mtx"
_RHS_FILE = "rhs.txt"
_TRUTH_FILE = "ground_truth.txt"
_META_FILE = "meta.txt"


def save_problem(problem: ProblemInstance, path) -> None:
    os.makedirs(path, exist_ok=True)
    write_matrix_market(os.path.join(path, _MATRIX_FILE), problem.A)
    write_vector(os.path.join(path, _RHS_FILE), problem.b)
    if problem.x_hat is not None:
        write_vector(os.path.join(path, _TRUTH_FILE), problem.x_hat)
    meta_path = os.path.join(path, _META_FILE)
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(f"m={problem.A.shape[0]}\n")
        fh.write(f"n={problem.A.shape[1]}\n")
        if problem.lambda_gen is not None:
            fh.write(f"lambda={problem.lambda_gen:.17g}\n")
        if problem.seed is not None:
            fh.write(f"seed={problem.seed}\n")
        if problem.kappa is not None:
            fh.write(f"kappa={problem.kappa:.17g}\n")


def _read_meta(path) -> dict:
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MatrixFileError(path, lineno, "expected key=value")
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    return meta


def load_problem(path) -> ProblemInstance:
    A = read_matrix_market(os.path.join(path, _MATRIX_FILE))
    b = read_vector(os.path.join(path, _RHS_FILE))
    truth_path = os.path.join(path, _TRUTH_FILE)
    x_hat = read_vector(truth_path) if os.path.exists(truth_path) else None
    meta_path = os.path.join(path, _META_FILE)
    meta = _read_meta(meta_path) if os.path.exists(meta_path) else {}
    lam = float(meta["lambda"]) if "lambda" in meta else None
    seed = int(meta["seed"]) if "seed" in meta else None
    kappa = float(meta["kappa"]) if "kappa" in meta else None
    return ProblemInstance(A=A, b=b, x_hat=x_hat, lambda_gen=lam, seed=seed,
                           kappa=kappa)
