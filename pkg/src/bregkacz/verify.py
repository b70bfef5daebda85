"""Self-check suites exposed through the command line.

Each suite exercises one family of identities or bounds the solvers are
built on and returns a pass/fail verdict with a short detail string.
These are lighter-weight, parameterizable versions of the repository's
test suite, meant for quick machine checks of an installed build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import solvers, theory
from .linops import BlockPartition
from .potentials import GroupSparse, Potential, Sparse, SquaredNorm
from .problems import generate_for_potential, generate_gaussian
from .sampling import BlockSampler, SplitMix64, block_probabilities

SUITES = ("fenchel", "lemma1", "theta", "equivalence", "pl-bound", "rates")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _standard_potentials(n: int) -> list[Potential]:
    groups = np.arange(0, n + 1, max(1, n // 4), dtype=np.int64)
    if groups[-1] != n:
        groups = np.append(groups, n)
    return [SquaredNorm(), Sparse(0.7), GroupSparse(0.9, groups)]


def run_fenchel(points: int = 1000, n: int = 12, seed: int = 7) -> SuiteResult:
    """Conjugate-pair identities on random points for every potential."""
    stream = SplitMix64(seed)
    worst = 0.0
    for pot in _standard_potentials(n):
        for _ in range(points):
            d = 3.0 * stream.normals(n)
            e = 3.0 * stream.normals(n)
            yv = stream.normals(n)
            x = pot.grad_conj(d)
            gap = abs(pot.value(x) + pot.conj(d) - float(x @ d))
            rel = gap / (1.0 + abs(float(x @ d)))
            worst = max(worst, rel)
            if rel > 1e-10:
                return SuiteResult("fenchel", False,
                                   f"Fenchel equality off by {rel:.2e} for {pot.label()}")
            lhs = float(np.linalg.norm(pot.grad_conj(d) - pot.grad_conj(e)))
            rhs = float(np.linalg.norm(d - e))
            if lhs > rhs * (1.0 + 1e-12) + 1e-12:
                return SuiteResult("fenchel", False,
                                   f"conjugate gradient not 1-Lipschitz for {pot.label()}")
            dist = pot.bregman(d, yv)
            sq = 0.5 * float(np.linalg.norm(x - yv) ** 2)
            if dist < sq - 1e-9 * (1.0 + sq):
                return SuiteResult("fenchel", False,
                                   f"strong-convexity bound violated for {pot.label()}")
    return SuiteResult("fenchel", True, f"max relative Fenchel gap {worst:.2e}")


def run_lemma1(pairs: int = 50, seed: int = 11) -> SuiteResult:
    """Bregman distance equals dual suboptimality on generated instances."""
    stream = SplitMix64(seed)
    worst = 0.0
    n = 12
    pots = _standard_potentials(n)
    for t in range(pairs):
        pot = pots[t % len(pots)]
        problem = generate_for_potential(9, n, pot, seed=1000 + t, compute_kappa=False)
        y = 2.0 * stream.normals(9)
        breg, subopt = theory.duality_gap_identity(problem, pot, y)
        gap = abs(breg - subopt) / (1.0 + abs(subopt))
        worst = max(worst, gap)
        if gap > 1e-10:
            return SuiteResult("lemma1", False,
                               f"identity off by {gap:.2e} for {pot.label()}")
    return SuiteResult("lemma1", True, f"max relative gap {worst:.2e} over {pairs} pairs")


def run_theta(steps: int = 100_000) -> SuiteResult:
    """Recursion identity, monotonicity, and two-sided bounds of theta_k."""
    for theta0 in (1.0, 0.5, 1.0 / 125.0):
        theta = theta0
        for k in range(steps):
            lower = (2.0 - theta0) / (k + (2.0 - theta0) / theta0)
            upper = 2.0 / (k + 2.0 / theta0)
            if not lower <= theta <= upper * (1.0 + 1e-15):
                return SuiteResult("theta", False,
                                   f"bounds violated at k={k}, theta0={theta0}")
            nxt = solvers.theta_next(theta)
            ident = (1.0 - nxt) / (nxt * nxt) * (theta * theta)
            if abs(ident - 1.0) > 1e-12:
                return SuiteResult("theta", False,
                                   f"recursion identity off by {abs(ident - 1.0):.2e} at k={k}")
            if not nxt < theta:
                return SuiteResult("theta", False, f"sequence not decreasing at k={k}")
            theta = nxt
    return SuiteResult("theta", True, f"{steps} steps for 3 start values")


def run_equivalence(iters: int = 10_000, seed: int = 3) -> SuiteResult:
    """Frozen-interpolation accelerated runs reproduce the plain method."""
    m, n, blocks = 40, 24, 8
    epochs = iters // blocks
    for lam, pot in ((0.0, SquaredNorm()), (0.6, Sparse(0.6)),
                     (0.5, GroupSparse(0.5, np.arange(0, n + 1, 4, dtype=np.int64)))):
        problem = generate_for_potential(m, n, pot, seed=77, compute_kappa=False)
        base = dict(blocks=blocks, alpha=0.0, seed=seed, tol=1e-30,
                    max_epochs=epochs, eval_every=max(1, epochs // 50),
                    record_primal=True)
        plain = solvers.run_bk(solvers.RunConfig(method="bk", **base), problem, pot)
        frozen = solvers.run_arbk(
            solvers.RunConfig(method="arbk", freeze_theta=True, **base), problem, pot)
        worst = 0.0
        for (e1, x1), (e2, x2) in zip(plain.primal_snapshots, frozen.primal_snapshots):
            if e1 != e2:
                return SuiteResult("equivalence", False, "snapshot epochs diverged")
            scale = max(1.0, float(np.linalg.norm(x1)))
            worst = max(worst, float(np.linalg.norm(x1 - x2)) / scale)
        if worst > 1e-12:
            return SuiteResult("equivalence", False,
                               f"trajectories differ by {worst:.2e} (lam={lam})")
    return SuiteResult("equivalence", True, f"{iters} iterations, 3 potentials")


def run_pl_bound(n: int = 8, instances: int = 5, samples: int = 10_000,
                 seed: int = 5) -> SuiteResult:
    """Brute-force gradient-domination constant certifies the error bound."""
    stream = SplitMix64(seed)
    for t in range(instances):
        lam = (0.0, 0.3, 1.0, 3.0)[t % 4]
        m = 5 + (t % 3) * 2
        problem = generate_gaussian(m, n, lam, seed=300 + t, compute_kappa=False)
        pot = Sparse(lam)
        cert = theory.pl_constant_bruteforce(problem.A, problem.x_hat, lam)
        Y = stream.normals(samples * m).reshape(samples, m)
        Y *= np.repeat((0.1, 1.0, 10.0), -(-samples // 3))[:samples, None]
        D = Y @ problem.A  # rows are A^T y
        X = np.sign(D) * np.maximum(np.abs(D) - lam, 0.0)
        breg = 0.5 * np.einsum("ij,ij->i", X, X) - D @ problem.x_hat \
            + pot.value(problem.x_hat)
        grad_sq = np.einsum("ij,ij->i", X @ problem.A.T - problem.b,
                            X @ problem.A.T - problem.b)
        slack = breg - cert.gamma * grad_sq
        bad = slack > 1e-9 * (1.0 + np.abs(breg))
        if np.any(bad):
            worst = float(slack[bad].max())
            return SuiteResult("pl-bound", False,
                               f"{int(bad.sum())} violations, worst slack {worst:.2e}")
    return SuiteResult("pl-bound", True,
                       f"{instances} instances x {samples} dual points, no violations")


def run_rates(seeds: int = 100, seed0: int = 1000) -> SuiteResult:
    """Accelerated-rate envelope and restarted contraction on tiny instances."""
    # accelerated envelope
    m, n, blocks = 10, 15, 5
    lam = 0.4
    pot = Sparse(lam)
    problem, y_hat = generate_gaussian(m, n, lam, seed=42, with_certificate=True,
                                       compute_kappa=False)
    partition = BlockPartition.build(problem.A, blocks)
    c0 = theory.acceleration_c0(problem, pot, partition.boundaries,
                                partition.lipschitz, y_hat)
    checkpoints = (10, 50, 200)
    dists = {k: [] for k in checkpoints}
    for s in range(seeds):
        state = solvers.SolverState.zero_arbk(m, n, blocks)
        sampler = BlockSampler(block_probabilities(partition.lipschitz, 0.0),
                               seed0 + s)
        for k in range(1, max(checkpoints) + 1):
            solvers.arbk_step(state, problem, partition, pot, sampler.sample())
            if k in dists:
                dists[k].append(pot.bregman(state.sy, problem.x_hat))
    for k in checkpoints:
        vals = np.asarray(dists[k])
        bound = theory.arbk_rate_bound(k, blocks, c0)
        lim = bound + 3.0 * vals.std(ddof=1) / math.sqrt(len(vals))
        if vals.mean() > lim:
            return SuiteResult("rates", False,
                               f"envelope exceeded at k={k}: {vals.mean():.3e} > {lim:.3e}")

    # restarted contraction with the zeta = e^-2 period
    m2, n2, blocks2 = 8, 6, 2
    lam2 = 0.5
    pot2 = Sparse(lam2)
    problem2 = generate_gaussian(m2, n2, lam2, seed=9, compute_kappa=False)
    part2 = BlockPartition.build(problem2.A, blocks2)
    cert = theory.pl_constant_bruteforce(problem2.A, problem2.x_hat, lam2)
    k_period = solvers.period_for_zeta(blocks2, part2.l_max, cert.gamma, math.exp(-2.0))
    d0 = pot2.value(problem2.x_hat)
    periods = 5
    per_period = {r: [] for r in range(1, periods + 1)}
    for s in range(seeds):
        cfg = solvers.RunConfig(method="rarbk", blocks=blocks2, alpha=0.0,
                                seed=seed0 + s, tol=1e-30,
                                max_epochs=-(-k_period * periods // blocks2) + 1,
                                eval_every=10 ** 9,
                                schedule=solvers.RestartSchedule.fixed(k_period))
        result = solvers.run_rarbk(cfg, problem2, pot2)
        for event in result.restarts[:periods]:
            per_period[event.period + 1].append(event.bregman_accepted)
    for r in range(1, periods + 1):
        vals = np.asarray(per_period[r], dtype=np.float64)
        lim = math.exp(-2.0 * r) * d0 + 3.0 * vals.std(ddof=1) / math.sqrt(len(vals))
        if vals.mean() > lim:
            return SuiteResult("rates", False,
                               f"restart contraction exceeded at r={r}: "
                               f"{vals.mean():.3e} > {lim:.3e}")
    return SuiteResult("rates", True,
                       f"envelope at k={checkpoints} and {periods} restart periods, "
                       f"{seeds} seeds")


_RUNNERS = {
    "fenchel": run_fenchel,
    "lemma1": run_lemma1,
    "theta": run_theta,
    "equivalence": run_equivalence,
    "pl-bound": run_pl_bound,
    "rates": run_rates,
}


def run_suites(names=None, **overrides) -> list[SuiteResult]:
    """Run the requested suites (all of them when names is empty)."""
    chosen = list(names) if names else list(SUITES)
    results = []
    for name in chosen:
        if name not in _RUNNERS:
            raise ValueError(f"unknown suite '{name}' (available: {', '.join(SUITES)})")
        kwargs = overrides.get(name, {})
        results.append(_RUNNERS[name](**kwargs))
    return results
