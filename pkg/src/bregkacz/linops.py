"""Dense matrices, contiguous row-block partitions, and block products.

A matrix here is a validated C-contiguous float64 ndarray.  Row blocks are
represented purely by boundary indices; the implicit selector matrices are
never materialized.  Each block carries its squared spectral norm, computed
by power iteration so the constants are reproducible without an SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidPartitionError(ValueError):
    """Requested row partition is impossible or malformed."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


class MatrixFileError(ValueError):
    """Malformed matrix or vector file; carries path and line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def validate_matrix(a) -> np.ndarray:
    """Return ``a`` as a validated C-contiguous float64 matrix.

    Requires a nonempty 2-d array with finite entries and no all-zero row.
    """
    A = np.ascontiguousarray(a, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("matrix must be 2-d and nonempty")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    row_sq = np.einsum("ij,ij->i", A, A)
    if np.any(row_sq == 0.0):
        bad = int(np.argmin(row_sq))
        raise ValueError(f"matrix has an all-zero row (row {bad})")
    return A


def partition_rows(m: int, blocks: int) -> np.ndarray:
    """Boundaries of ``blocks`` contiguous row blocks covering ``m`` rows.

    The first ``m % blocks`` blocks get the extra row, so block sizes
    differ by at most one.
    """
    if blocks < 1 or blocks > m:
        raise InvalidPartitionError(f"cannot split {m} rows into {blocks} blocks")
    base, extra = divmod(m, blocks)
    sizes = np.full(blocks, base, dtype=np.int64)
    sizes[:extra] += 1
    boundaries = np.zeros(blocks + 1, dtype=np.int64)
    np.cumsum(sizes, out=boundaries[1:])
    return boundaries


def _squared_spectral_norm(G, tol: float, max_iter: int) -> float:
    """Largest eigenvalue of G^T G by power iteration from a fixed start."""
    n = G.shape[1]
    v = np.full(n, 1.0 / math.sqrt(n))
    lam_prev = -1.0
    retried = False
    for _ in range(max_iter):
        w = G @ v
        lam = float(w @ w)
        u = G.T @ w
        nrm = float(np.linalg.norm(u))
        if nrm == 0.0:
            if retried:
                raise PowerIterationError("start vectors lie in the kernel of the block")
            # all-ones start can be orthogonal to the range; switch to a ramp
            v = np.arange(1.0, n + 1.0)
            v /= np.linalg.norm(v)
            retried = True
            lam_prev = -1.0
            continue
        v = u / nrm
        if lam_prev >= 0.0 and abs(lam - lam_prev) <= tol * lam:
            return lam
        lam_prev = lam
    raise PowerIterationError(f"no convergence within {max_iter} iterations")


def block_lipschitz(A, boundaries, tol: float = 1e-12, max_iter: int = 10000) -> np.ndarray:
    """Squared spectral norm of every row block of ``A``."""
    A = np.asarray(A, dtype=np.float64)
    boundaries = np.asarray(boundaries, dtype=np.int64)
    out = np.empty(boundaries.size - 1)
    for i in range(out.size):
        r0, r1 = boundaries[i], boundaries[i + 1]
        out[i] = _squared_spectral_norm(A[r0:r1], tol, max_iter)
    return out


def block_apply(A, boundaries, i: int, x) -> np.ndarray:
    """Product of row block ``i`` with ``x``."""
    r0, r1 = boundaries[i], boundaries[i + 1]
    return A[r0:r1] @ x


def block_apply_transpose(A, boundaries, i: int, r) -> np.ndarray:
    """Transposed product of row block ``i`` with a block-sized vector ``r``."""
    r0, r1 = boundaries[i], boundaries[i + 1]
    return A[r0:r1].T @ r


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous row blocks of a matrix and their Lipschitz constants."""

    boundaries: np.ndarray
    lipschitz: np.ndarray

    @classmethod
    def build(cls, A, blocks: int, tol: float = 1e-12, max_iter: int = 10000) -> "BlockPartition":
        A = np.asarray(A)
        boundaries = partition_rows(A.shape[0], blocks)
        return cls(boundaries=boundaries, lipschitz=block_lipschitz(A, boundaries, tol, max_iter))

    @property
    def blocks(self) -> int:
        return self.boundaries.size - 1

    @property
    def rows(self) -> int:
        return int(self.boundaries[-1])

    def block_range(self, i: int) -> tuple[int, int]:
        return int(self.boundaries[i]), int(self.boundaries[i + 1])

    @property
    def l_max(self) -> float:
        return float(self.lipschitz.max())


# --- matrix and vector files ------------------------------------------------
#
# MatrixMarket "array" (dense, column-major) and "coordinate" real files are
# read; writing always uses the array format with 17 significant digits so
# doubles round-trip exactly.

def write_matrix_market(path, A) -> None:
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{m} {n}\n")
        for j in range(n):
            for i in range(m):
                fh.write(f"{A[i, j]:.17g}\n")


def _tokens(path):
    """Yield (line_number, stripped_line) skipping blanks and % comments."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or (line.startswith("%") and lineno > 1):
                continue
            yield lineno, line


def read_matrix_market(path) -> np.ndarray:
    """Read a dense or coordinate real MatrixMarket file into a dense matrix."""
    it = _tokens(path)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise MatrixFileError(path, 0, "empty file") from None
    parts = header.lower().split()
    if len(parts) != 5 or parts[0] != "%%matrixmarket" or parts[1] != "matrix":
        raise MatrixFileError(path, lineno, "missing MatrixMarket header")
    layout, kind, symmetry = parts[2], parts[3], parts[4]
    if kind not in ("real", "integer") or symmetry != "general":
        raise MatrixFileError(path, lineno, f"unsupported type '{kind} {symmetry}'")
    if layout not in ("array", "coordinate"):
        raise MatrixFileError(path, lineno, f"unsupported layout '{layout}'")

    try:
        lineno, size_line = next(it)
    except StopIteration:
        raise MatrixFileError(path, 0, "missing size line") from None
    fields = size_line.split()
    want = 2 if layout == "array" else 3
    if len(fields) != want:
        raise MatrixFileError(path, lineno, f"size line needs {want} integers")
    try:
        dims = [int(f) for f in fields]
    except ValueError:
        raise MatrixFileError(path, lineno, "size line is not integral") from None
    m, n = dims[0], dims[1]
    if m < 1 or n < 1:
        raise MatrixFileError(path, lineno, "matrix dimensions must be positive")

    A = np.zeros((m, n))
    if layout == "array":
        count = 0
        for lineno, line in it:
            for tok in line.split():
                if count >= m * n:
                    raise MatrixFileError(path, lineno, "more entries than m*n")
                try:
                    val = float(tok)
                except ValueError:
                    raise MatrixFileError(path, lineno, f"bad number '{tok}'") from None
                A[count % m, count // m] = val  # array format is column-major
                count += 1
        if count != m * n:
            raise MatrixFileError(path, lineno, f"expected {m * n} entries, got {count}")
    else:
        nnz = dims[2]
        count = 0
        for lineno, line in it:
            fields = line.split()
            if len(fields) != 3:
                raise MatrixFileError(path, lineno, "coordinate entry needs 'i j value'")
            try:
                i, j, val = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError:
                raise MatrixFileError(path, lineno, "bad coordinate entry") from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixFileError(path, lineno, f"index ({i},{j}) out of bounds")
            A[i - 1, j - 1] = val
            count += 1
        if count != nnz:
            raise MatrixFileError(path, lineno, f"expected {nnz} entries, got {count}")
    return A


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for val in v:
            fh.write(f"{val:.17g}\n")


def read_vector(path) -> np.ndarray:
    vals = []
    for lineno, line in _tokens(path):
        for tok in line.split():
            try:
                vals.append(float(tok))
            except ValueError:
                raise MatrixFileError(path, lineno, f"bad number '{tok}'") from None
    return np.asarray(vals)
