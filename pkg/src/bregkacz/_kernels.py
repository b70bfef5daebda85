"""Compiled inner loops for the iterative solvers.

The chunk kernels run a batch of block iterations in place.  Their
floating-point structure is deliberately shared between the plain and the
accelerated method: the accelerated kernel with the interpolation factor
frozen (freeze=True, so M*theta is exactly 1.0) performs bit-for-bit the
same arithmetic as the plain kernel, which makes the two trajectories
comparable at machine precision.  Do not enable fastmath here.
"""

import math

from numba import njit


@njit(cache=True, nogil=True)
def conj_grad_into(mode, lam, groups, d, out):
    """out = gradient of the conjugate potential at d (mode dispatch)."""
    n = d.shape[0]
    if mode == 0:
        for j in range(n):
            out[j] = d[j]
    elif mode == 1:
        for j in range(n):
            v = d[j]
            if v > lam:
                out[j] = v - lam
            elif v < -lam:
                out[j] = v + lam
            else:
                out[j] = 0.0
    else:
        for g in range(groups.shape[0] - 1):
            a = groups[g]
            c = groups[g + 1]
            s = 0.0
            for j in range(a, c):
                s += d[j] * d[j]
            nrm = math.sqrt(s)
            if nrm > lam:
                scale = (nrm - lam) / nrm
                for j in range(a, c):
                    out[j] = scale * d[j]
            else:
                for j in range(a, c):
                    out[j] = 0.0


@njit(cache=True, nogil=True)
def _row_dot(A, r, x):
    # four independent accumulators so the reduction pipelines without
    # reassociation by the compiler (keeps results deterministic)
    n = A.shape[1]
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    j = 0
    while j + 4 <= n:
        s0 += A[r, j] * x[j]
        s1 += A[r, j + 1] * x[j + 1]
        s2 += A[r, j + 2] * x[j + 2]
        s3 += A[r, j + 3] * x[j + 3]
        j += 4
    while j < n:
        s0 += A[r, j] * x[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


@njit(cache=True, nogil=True)
def _block_residual_scaled(A, b, x, r0, r1, divisor, res):
    """res[t] = (A[r0+t] . x - b[r0+t]) / divisor for the block's rows."""
    for r in range(r0, r1):
        res[r - r0] = (_row_dot(A, r, x) - b[r]) / divisor


@njit(cache=True, nogil=True)
def _accumulate_block_transpose(A, r0, r1, coef, w):
    """w = sum_r A[r] * coef[r - r0] over the block's rows."""
    n = A.shape[1]
    for j in range(n):
        w[j] = 0.0
    for r in range(r0, r1):
        c = coef[r - r0]
        for j in range(n):
            w[j] += A[r, j] * c
    return w


@njit(cache=True, nogil=True)
def theta_step(theta):
    t2 = theta * theta
    return (math.sqrt(t2 * t2 + 4.0 * t2) - t2) * 0.5


@njit(cache=True, nogil=True)
def bk_chunk(A, b, bounds, lip, idx, y, sy, x, mode, lam, groups, res_buf, w_buf):
    """Run len(idx) plain block iterations in place on (y, sy, x)."""
    n = sy.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        r0 = bounds[i]
        r1 = bounds[i + 1]
        _block_residual_scaled(A, b, x, r0, r1, lip[i], res_buf)
        for r in range(r0, r1):
            y[r] -= res_buf[r - r0]
        _accumulate_block_transpose(A, r0, r1, res_buf, w_buf)
        for j in range(n):
            sy[j] -= w_buf[j]
        conj_grad_into(mode, lam, groups, sy, x)


@njit(cache=True, nogil=True)
def arbk_chunk(A, b, bounds, lip, idx, theta, blocks, freeze,
               y, z, sy, sz, sv, xv, mode, lam, groups, res_buf, w_buf):
    """Run len(idx) accelerated block iterations in place; returns theta.

    State vectors y, z live in row space with caches sy = A^T y and
    sz = A^T z maintained incrementally; sv and xv are scratch.  With
    freeze=True the interpolation stays at its initial value and the
    combined step factor is pinned to exactly 1.
    """
    m = y.shape[0]
    n = sy.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        r0 = bounds[i]
        r1 = bounds[i + 1]
        mtheta = 1.0 if freeze else blocks * theta
        for j in range(n):
            sv[j] = sy[j] + theta * (sz[j] - sy[j])
        conj_grad_into(mode, lam, groups, sv, xv)
        # interpolate y toward z before z changes (y becomes v in place)
        for r in range(m):
            y[r] = y[r] + theta * (z[r] - y[r])
        _block_residual_scaled(A, b, xv, r0, r1, lip[i] * mtheta, res_buf)
        for r in range(r0, r1):
            step = -res_buf[r - r0]
            z[r] += step
            y[r] += mtheta * step
        for r in range(r0, r1):
            res_buf[r - r0] = -res_buf[r - r0]
        _accumulate_block_transpose(A, r0, r1, res_buf, w_buf)
        for j in range(n):
            sz[j] += w_buf[j]
            sy[j] = sv[j] + mtheta * w_buf[j]
        if not freeze:
            theta = theta_step(theta)
    return theta
