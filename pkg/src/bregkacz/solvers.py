"""Randomized block Bregman-Kaczmarz solvers: plain, accelerated, restarted.

All three methods work on the dual of the linearly constrained problem
min f(x) s.t. Ax = b.  The dual iterates y (and the accelerated method's
auxiliary z) live in row space; the primal iterate is recovered through
x = grad f*(A^T y).  The transposed products A^T y and A^T z are cached
and updated incrementally with one block-transpose product per iteration,
then recomputed from scratch at every epoch boundary to bound drift.

One epoch is `blocks` block iterations, i.e. one expected pass over the
rows of A.  Stopping (relative residual, or relative error when the true
solution is known) is checked at epoch boundaries only, since the
residual costs a full matrix-vector product.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linops import BlockPartition
from .potentials import Potential
from .sampling import BlockSampler, block_probabilities


# --- interpolation sequence and restart periods ------------------------------

def theta_next(theta: float) -> float:
    """Next interpolation factor: (sqrt(theta^4 + 4 theta^2) - theta^2) / 2.

    Strictly decreasing, stays in (0, theta), and preserves the invariant
    (1 - theta') / theta'^2 = 1 / theta^2.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    return float(_kernels.theta_step(theta))


def doubling_period(k0: int, r: int) -> int:
    """Period r of the doubling schedule: k0 * 2^v where v is the 2-adic
    valuation of r + 1 (so the sequence runs k0, 2k0, k0, 4k0, k0, 2k0, ...)."""
    if k0 < 1:
        raise ValueError("base period must be positive")
    if r < 0:
        raise ValueError("period index must be nonnegative")
    s = r + 1
    return k0 * (s & -s)


def restart_period_kstar(blocks: int, l_max: float, gamma: float) -> int:
    """Fixed restart period sufficient for linear convergence,
    ceil(2 e M (sqrt((L_max + gamma) / gamma) - 1) + 1)."""
    if blocks < 1 or l_max <= 0 or gamma <= 0:
        raise ValueError("blocks, l_max and gamma must be positive")
    val = 2.0 * math.e * blocks * (math.sqrt((l_max + gamma) / gamma) - 1.0) + 1.0
    return int(math.ceil(val))


def period_for_zeta(blocks: int, l_max: float, gamma: float, zeta: float) -> int:
    """Smallest iteration count guaranteeing a factor-zeta contraction of the
    expected Bregman distance over one restart period."""
    if blocks < 1 or l_max <= 0 or gamma <= 0:
        raise ValueError("blocks, l_max and gamma must be positive")
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    val = 2.0 * blocks * (math.sqrt((l_max + gamma) / (zeta * gamma)) - 1.0) + 1.0
    return int(math.ceil(val))


@dataclass(frozen=True)
class RestartSchedule:
    """Restart period sequence: fixed K, or the doubling schedule on K0."""

    kind: str
    base: int

    def __post_init__(self):
        if self.kind not in ("fixed", "doubling"):
            raise ValueError(f"unknown schedule kind '{self.kind}'")
        if self.base < 1:
            raise ValueError("schedule base period must be >= 1")

    @staticmethod
    def fixed(k: int) -> "RestartSchedule":
        return RestartSchedule("fixed", int(k))

    @staticmethod
    def doubling(k0: int) -> "RestartSchedule":
        return RestartSchedule("doubling", int(k0))

    def period(self, r: int) -> int:
        if self.kind == "fixed":
            return self.base
        return doubling_period(self.base, r)


# --- solver state and single steps -------------------------------------------

@dataclass
class SolverState:
    """Dual-space state shared by the solvers.

    y and z are the dual iterates, sy and sz their cached transposed
    products A^T y and A^T z.  The plain method only uses (y, sy); z and
    sz stay None there.
    """

    k: int
    y: np.ndarray
    z: np.ndarray | None
    theta: float
    sy: np.ndarray
    sz: np.ndarray | None

    @staticmethod
    def zero_bk(m: int, n: int) -> "SolverState":
        return SolverState(k=0, y=np.zeros(m), z=None, theta=1.0,
                           sy=np.zeros(n), sz=None)

    @staticmethod
    def zero_arbk(m: int, n: int, blocks: int) -> "SolverState":
        return SolverState(k=0, y=np.zeros(m), z=np.zeros(m), theta=1.0 / blocks,
                           sy=np.zeros(n), sz=np.zeros(n))

    @staticmethod
    def warm_arbk(A, y0, blocks: int) -> "SolverState":
        """Fresh accelerated state started from the dual point y0 (z = y)."""
        y = np.array(y0, dtype=np.float64, copy=True)
        sy = A.T @ y
        return SolverState(k=0, y=y, z=y.copy(), theta=1.0 / blocks,
                           sy=sy, sz=sy.copy())


def primal_iterate(state: SolverState, potential: Potential) -> np.ndarray:
    """Primal point of the current dual state, x = grad f*(A^T y)."""
    return potential.grad_conj(state.sy)


def bk_step(state: SolverState, problem, partition: BlockPartition,
            potential: Potential, i: int) -> SolverState:
    """One plain block iteration: project the dual variable along block i.

    Updates d = A^T y by the block residual scaled with the block's
    Lipschitz constant; the primal iterate is recovered lazily from sy.
    """
    A, b = problem.A, problem.b
    r0, r1 = partition.block_range(i)
    x = potential.grad_conj(state.sy)
    res = (A[r0:r1] @ x - b[r0:r1]) / partition.lipschitz[i]
    state.y[r0:r1] -= res
    state.sy -= A[r0:r1].T @ res
    state.k += 1
    return state


def arbk_step(state: SolverState, problem, partition: BlockPartition,
              potential: Potential, i: int, freeze_theta: bool = False) -> SolverState:
    """One accelerated block iteration.

    Interpolates between y and z, takes the block coordinate step on z at
    the interpolated point, then extrapolates y.  With freeze_theta the
    interpolation factor stays at its initial value (and the combined
    factor blocks*theta is pinned to exactly 1), which reproduces the
    plain method when z starts equal to y.
    """
    A, b = problem.A, problem.b
    r0, r1 = partition.block_range(i)
    theta = state.theta
    mtheta = 1.0 if freeze_theta else partition.blocks * theta
    sv = state.sy + theta * (state.sz - state.sy)
    xv = potential.grad_conj(sv)
    state.y += theta * (state.z - state.y)
    res = (A[r0:r1] @ xv - b[r0:r1]) / (partition.lipschitz[i] * mtheta)
    step = -res
    state.z[r0:r1] += step
    state.y[r0:r1] += mtheta * step
    w = A[r0:r1].T @ step
    state.sz += w
    state.sy[:] = sv + mtheta * w
    if not freeze_theta:
        state.theta = theta_next(theta)
    state.k += 1
    return state


# --- run configuration, traces, results --------------------------------------

_METHODS = ("bk", "arbk", "rarbk")


@dataclass
class RunConfig:
    """Everything needed to reproduce one solver run."""

    method: str
    blocks: int
    alpha: float | None = None
    seed: int = 0
    tol: float = 1e-6
    max_epochs: int = 100
    eval_every: int = 1
    schedule: RestartSchedule | None = None
    record_primal: bool = False
    freeze_theta: bool = False

    def __post_init__(self):
        method = self.method.lower()
        if method not in _METHODS:
            raise ValueError(f"unknown method '{self.method}'")
        self.method = method
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.method == "rarbk" and self.schedule is None:
            raise ValueError("rarbk needs a restart schedule")

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return 1.0 if self.method == "bk" else 0.0

    def label(self) -> str:
        return f"{self.method.upper()}-{self.blocks}"


@dataclass
class TraceRecord:
    """One evaluation-point row; field order is the CSV column order."""

    method: str
    epoch: int
    rel_residual: float
    rel_error: float | None
    dual_objective: float
    bregman_to_solution: float | None
    restarts_accepted: int
    restarts_rejected: int
    wall_ms: int


@dataclass
class RestartEvent:
    """Outcome of one restart period of the restarted method."""

    period: int
    iterations_done: int
    psi_candidate: float
    psi_before: float
    accepted: bool
    bregman_accepted: float | None


@dataclass
class RunResult:
    config: RunConfig
    label: str
    x: np.ndarray
    trace: list[TraceRecord]
    epochs_run: int
    epochs_to_tol: int | None
    reached_tol: bool
    residual_is_absolute: bool
    wall_seconds: float
    restarts: list[RestartEvent] = field(default_factory=list)
    primal_snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)


class _Monitor:
    """Per-epoch metric evaluation, trace emission, and stop detection."""

    def __init__(self, config: RunConfig, problem, potential: Potential):
        self.config = config
        self.problem = problem
        self.potential = potential
        self.norm_b = float(np.linalg.norm(problem.b))
        self.residual_is_absolute = self.norm_b == 0.0
        self.x_hat = problem.x_hat
        if self.x_hat is not None:
            self.norm_x_hat = float(np.linalg.norm(self.x_hat))
            self.f_x_hat = potential.value(self.x_hat)
        self.trace: list[TraceRecord] = []
        self.primal_snapshots: list[tuple[int, np.ndarray]] = []
        self.epochs_to_tol: int | None = None
        self.wall = 0.0

    def check(self, epoch: int, x, sy, y, accepted: int = 0, rejected: int = 0) -> bool:
        """Evaluate metrics at an epoch boundary; return True when converged."""
        pot, prob = self.potential, self.problem
        r = prob.A @ x - prob.b
        res = float(np.linalg.norm(r))
        rel_res = res if self.residual_is_absolute else res / self.norm_b
        rel_err = None
        breg = None
        conj_sy = pot.conj(sy)
        if self.x_hat is not None:
            if self.norm_x_hat > 0:
                rel_err = float(np.linalg.norm(x - self.x_hat)) / self.norm_x_hat
            breg = conj_sy - float(sy @ self.x_hat) + self.f_x_hat
            breg = breg if breg > 0.0 else 0.0
        psi = conj_sy - float(prob.b @ y)
        if epoch % self.config.eval_every == 0 or self._stopped(rel_res, rel_err):
            self.trace.append(TraceRecord(
                method=self.config.label(), epoch=epoch, rel_residual=rel_res,
                rel_error=rel_err, dual_objective=psi, bregman_to_solution=breg,
                restarts_accepted=accepted, restarts_rejected=rejected,
                wall_ms=int(self.wall * 1000.0)))
            if self.config.record_primal:
                self.primal_snapshots.append((epoch, np.array(x, copy=True)))
        if self._stopped(rel_res, rel_err):
            if self.epochs_to_tol is None:
                self.epochs_to_tol = epoch
            return True
        return False

    def _stopped(self, rel_res: float, rel_err) -> bool:
        tol = self.config.tol
        if not math.isfinite(tol):
            return False
        if rel_res <= tol:
            return True
        return rel_err is not None and rel_err <= tol


def _prepare(config: RunConfig, problem):
    partition = BlockPartition.build(problem.A, config.blocks)
    probs = block_probabilities(partition.lipschitz, config.resolved_alpha())
    sampler = BlockSampler(probs, config.seed)
    return partition, sampler


def run_bk(config: RunConfig, problem, potential: Potential) -> RunResult:
    """Run the plain block method until tolerance or the epoch budget."""
    A, b = problem.A, problem.b
    m, n = A.shape
    partition, sampler = _prepare(config, problem)
    mon = _Monitor(config, problem, potential)

    y = np.zeros(m)
    sy = np.zeros(n)
    x = potential.grad_conj(sy)
    res_buf = np.empty(int(np.diff(partition.boundaries).max()))
    w_buf = np.empty(n)

    stopped = mon.check(0, x, sy, y)
    epoch = 0
    while not stopped and epoch < config.max_epochs:
        idx = sampler.sample_many(partition.blocks)
        t0 = time.perf_counter()
        _kernels.bk_chunk(A, b, partition.boundaries, partition.lipschitz, idx,
                          y, sy, x, potential.mode, potential.lam,
                          potential.group_boundaries, res_buf, w_buf)
        sy[:] = A.T @ y
        x = potential.grad_conj(sy)
        mon.wall += time.perf_counter() - t0
        epoch += 1
        stopped = mon.check(epoch, x, sy, y)

    return RunResult(config=config, label=config.label(), x=x, trace=mon.trace,
                     epochs_run=epoch, epochs_to_tol=mon.epochs_to_tol,
                     reached_tol=mon.epochs_to_tol is not None,
                     residual_is_absolute=mon.residual_is_absolute,
                     wall_seconds=mon.wall,
                     primal_snapshots=mon.primal_snapshots)


def run_arbk(config: RunConfig, problem, potential: Potential) -> RunResult:
    """Run the accelerated block method until tolerance or the epoch budget."""
    A, b = problem.A, problem.b
    m, n = A.shape
    partition, sampler = _prepare(config, problem)
    mon = _Monitor(config, problem, potential)

    y = np.zeros(m)
    z = np.zeros(m)
    sy = np.zeros(n)
    sz = np.zeros(n)
    sv = np.empty(n)
    xv = np.empty(n)
    theta = 1.0 / partition.blocks
    res_buf = np.empty(int(np.diff(partition.boundaries).max()))
    w_buf = np.empty(n)

    x = potential.grad_conj(sy)
    stopped = mon.check(0, x, sy, y)
    epoch = 0
    while not stopped and epoch < config.max_epochs:
        idx = sampler.sample_many(partition.blocks)
        t0 = time.perf_counter()
        theta = _kernels.arbk_chunk(A, b, partition.boundaries, partition.lipschitz,
                                    idx, theta, partition.blocks, config.freeze_theta,
                                    y, z, sy, sz, sv, xv, potential.mode,
                                    potential.lam, potential.group_boundaries,
                                    res_buf, w_buf)
        sy[:] = A.T @ y
        sz[:] = A.T @ z
        x = potential.grad_conj(sy)
        mon.wall += time.perf_counter() - t0
        epoch += 1
        stopped = mon.check(epoch, x, sy, y)

    return RunResult(config=config, label=config.label(), x=x, trace=mon.trace,
                     epochs_run=epoch, epochs_to_tol=mon.epochs_to_tol,
                     reached_tol=mon.epochs_to_tol is not None,
                     residual_is_absolute=mon.residual_is_absolute,
                     wall_seconds=mon.wall,
                     primal_snapshots=mon.primal_snapshots)


def run_rarbk(config: RunConfig, problem, potential: Potential) -> RunResult:
    """Run the restarted accelerated method.

    Each period restarts the accelerated method from the currently
    accepted dual point (theta back to 1/blocks, z = y); the candidate
    end point is kept only if it did not increase the dual objective.
    If the tolerance is hit mid-period the iterate that achieved it is
    returned; on budget exhaustion the answer comes from the accepted
    point, x = grad f*(A^T y_accepted).
    """
    A, b = problem.A, problem.b
    m, n = A.shape
    partition, sampler = _prepare(config, problem)
    M = partition.blocks
    mon = _Monitor(config, problem, potential)

    y_acc = np.zeros(m)
    sy_acc = np.zeros(n)
    psi_acc = potential.conj(sy_acc) - float(b @ y_acc)
    restarts: list[RestartEvent] = []
    accepted_count = 0
    rejected_count = 0

    sv = np.empty(n)
    xv = np.empty(n)
    res_buf = np.empty(int(np.diff(partition.boundaries).max()))
    w_buf = np.empty(n)

    x = potential.grad_conj(sy_acc)
    stopped = mon.check(0, x, sy_acc, y_acc)
    epoch = 0
    total_iters = 0
    period = 0

    while not stopped and epoch < config.max_epochs:
        k_r = config.schedule.period(period)
        y = y_acc.copy()
        z = y_acc.copy()
        sy = sy_acc.copy()
        sz = sy_acc.copy()
        theta = 1.0 / M
        done = 0
        while done < k_r and not stopped and epoch < config.max_epochs:
            nit = min(k_r - done, M - (total_iters % M))
            idx = sampler.sample_many(nit)
            t0 = time.perf_counter()
            theta = _kernels.arbk_chunk(A, b, partition.boundaries, partition.lipschitz,
                                        idx, theta, M, False,
                                        y, z, sy, sz, sv, xv, potential.mode,
                                        potential.lam, potential.group_boundaries,
                                        res_buf, w_buf)
            mon.wall += time.perf_counter() - t0
            total_iters += nit
            done += nit
            if total_iters % M == 0:
                t0 = time.perf_counter()
                sy[:] = A.T @ y
                sz[:] = A.T @ z
                mon.wall += time.perf_counter() - t0
                x = potential.grad_conj(sy)
                epoch += 1
                stopped = mon.check(epoch, x, sy, y, accepted_count, rejected_count)

        # conditional acceptance at the period end (also applied when the
        # run terminates mid-period, so the accepted point reflects all work)
        sy_cand = A.T @ y
        psi_cand = potential.conj(sy_cand) - float(b @ y)
        psi_prev = psi_acc
        accept = psi_cand <= psi_acc
        if accept:
            y_acc, sy_acc, psi_acc = y.copy(), sy_cand, psi_cand
            accepted_count += 1
        else:
            rejected_count += 1
        breg = None
        if problem.x_hat is not None:
            breg = potential.bregman(sy_acc, problem.x_hat)
        restarts.append(RestartEvent(period=period, iterations_done=done,
                                     psi_candidate=psi_cand, psi_before=psi_prev,
                                     accepted=accept, bregman_accepted=breg))
        period += 1

    if stopped:
        x_final = x
    else:
        x_final = potential.grad_conj(sy_acc)

    return RunResult(config=config, label=config.label(), x=x_final, trace=mon.trace,
                     epochs_run=epoch, epochs_to_tol=mon.epochs_to_tol,
                     reached_tol=mon.epochs_to_tol is not None,
                     residual_is_absolute=mon.residual_is_absolute,
                     wall_seconds=mon.wall, restarts=restarts,
                     primal_snapshots=mon.primal_snapshots)


def run(config: RunConfig, problem, potential: Potential) -> RunResult:
    """Dispatch on config.method."""
    if config.method == "bk":
        return run_bk(config, problem, potential)
    if config.method == "arbk":
        return run_arbk(config, problem, potential)
    return run_rarbk(config, problem, potential)
