"""Command line: generate problems, run solver comparisons, verify identities.

Subcommands
-----------
generate   draw a synthetic instance and write it to a problem directory
run        run one or more solver configurations, write traces + a summary
verify     run self-check suites; nonzero exit on any failure

Every flag can also be supplied through an environment variable with the
``BREGKACZ_`` prefix (e.g. ``BREGKACZ_SEED=7``), or through a key=value
config file passed with --config; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import verify as verify_mod
from .linops import BlockPartition
from .potentials import Sparse, SquaredNorm
from .problems import ProblemInstance, generate_gaussian, load_problem, save_problem
from .solvers import (RestartSchedule, RunConfig, TraceRecord,
                      restart_period_kstar, run)
from .theory import pl_constant_bruteforce

ENV_PREFIX = "BREGKACZ_"

TRACE_COLUMNS = ("method", "epoch", "rel_residual", "rel_error", "dual_objective",
                 "bregman", "restarts_acc", "restarts_rej", "wall_ms")


def _env_default(name: str, fallback=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), fallback)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_trace_csv(path, records: list[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in (
                r.method, r.epoch, r.rel_residual, r.rel_error, r.dual_objective,
                r.bregman_to_solution, r.restarts_accepted, r.restarts_rejected,
                r.wall_ms)) + "\n")


def write_trace_jsonl(path, records: list[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            row = {
                "method": r.method, "epoch": r.epoch,
                "rel_residual": r.rel_residual, "rel_error": r.rel_error,
                "dual_objective": r.dual_objective,
                "bregman": r.bregman_to_solution,
                "restarts_acc": r.restarts_accepted,
                "restarts_rej": r.restarts_rejected, "wall_ms": r.wall_ms,
            }
            fh.write(json.dumps(row) + "\n")


def _add_common_problem_flags(p):
    p.add_argument("--m", type=int, default=_env_default("m"),
                   help="number of rows for a generated instance")
    p.add_argument("--n", type=int, default=_env_default("n"),
                   help="number of columns for a generated instance")
    p.add_argument("--lambda", dest="lam", type=float,
                   default=_env_default("lambda", "1.0"),
                   help="sparsity weight of the potential")
    p.add_argument("--seed", type=int, default=_env_default("seed", "1"),
                   help="64-bit seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bregkacz",
        description="Randomized block Bregman-Kaczmarz solvers and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic problem directory")
    _add_common_problem_flags(g)
    g.add_argument("--out", required=True, help="output problem directory")

    r = sub.add_parser("run", help="run solver configurations on a problem")
    _add_common_problem_flags(r)
    r.add_argument("--problem", default=_env_default("problem"),
                   help="problem directory (generated on the fly when omitted)")
    r.add_argument("--method", default=_env_default("method", "bk"),
                   help="comma-separated subset of bk,arbk,rarbk")
    r.add_argument("--blocks", default=_env_default("blocks", "1"),
                   help="comma-separated block counts")
    r.add_argument("--alpha", type=float, default=_env_default("alpha"),
                   help="sampling exponent in [0,1]; default 1 for bk, 0 otherwise")
    r.add_argument("--tol", type=float, default=_env_default("tol", "1e-6"))
    r.add_argument("--max-epochs", type=int, default=_env_default("max_epochs"),
                   help="epoch budget (default 200*max(m,n))")
    r.add_argument("--eval-every", type=int, default=_env_default("eval_every", "1"),
                   help="epochs between trace rows")
    r.add_argument("--restart-fixed", type=int, default=_env_default("restart_fixed"),
                   help="fixed restart period in iterations (rarbk)")
    r.add_argument("--restart-doubling", type=int,
                   default=_env_default("restart_doubling"),
                   help="base period of the doubling restart schedule (rarbk)")
    r.add_argument("--kstar-gamma", type=float, default=_env_default("kstar_gamma"),
                   help="error-bound constant estimate used to derive a fixed "
                        "restart period when no schedule is given")
    r.add_argument("--out", required=True, help="output directory for traces")
    r.add_argument("--format", choices=("csv", "jsonl"),
                   default=_env_default("format", "csv"))
    r.add_argument("--config", help="key=value file with defaults for the flags above")
    r.add_argument("--workers", type=int, default=_env_default("workers"),
                   help="parallel runs (default: number of cpus)")

    v = sub.add_parser("verify", help="run self-check suites")
    v.add_argument("--suite", action="append", default=None,
                   help="suite name (repeatable); all suites when omitted")
    v.add_argument("--n", type=int, default=None, help="column count for pl-bound")
    v.add_argument("--seeds", type=int, default=None, help="seed count for rates")
    v.add_argument("--points", type=int, default=None, help="sample count for fenchel")
    return parser


def _apply_config_file(args) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{args.config}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key == "lambda":
                key = "lam"
            if not hasattr(args, key):
                raise ValueError(f"{args.config}:{lineno}: unknown key '{key}'")
            # explicit flags win over file values
            if key in args._explicit:
                continue
            setattr(args, key, value.strip())
    _coerce_types(args)


def _coerce_types(args) -> None:
    for name, caster in (("m", int), ("n", int), ("lam", float), ("seed", int),
                         ("alpha", float), ("tol", float), ("max_epochs", int),
                         ("eval_every", int), ("restart_fixed", int),
                         ("restart_doubling", int), ("kstar_gamma", float),
                         ("workers", int)):
        if hasattr(args, name):
            val = getattr(args, name)
            if isinstance(val, str):
                setattr(args, name, caster(val))


def _load_or_generate(args) -> ProblemInstance:
    if getattr(args, "problem", None):
        return load_problem(args.problem)
    if args.m is None or args.n is None:
        raise SystemExit("either --problem or both --m and --n are required")
    return generate_gaussian(int(args.m), int(args.n), float(args.lam), int(args.seed))


def cmd_generate(args) -> int:
    problem = generate_gaussian(int(args.m), int(args.n), float(args.lam),
                                int(args.seed))
    save_problem(problem, args.out)
    nnz = int(np.count_nonzero(problem.x_hat))
    kappa = "n/a" if problem.kappa is None else f"{problem.kappa:.2f}"
    print(f"wrote {args.out}: {problem.A.shape[0]}x{problem.A.shape[1]}, "
          f"lambda={args.lam}, seed={args.seed}, nnz(x_hat)={nnz}, kappa={kappa}")
    return 0


def _schedule_for(args, problem, blocks: int) -> RestartSchedule:
    if args.restart_fixed is not None:
        return RestartSchedule.fixed(int(args.restart_fixed))
    if args.restart_doubling is not None:
        return RestartSchedule.doubling(int(args.restart_doubling))
    gamma = args.kstar_gamma
    if gamma is None:
        if problem.x_hat is not None and problem.A.shape[1] <= 12:
            lam = problem.lambda_gen if problem.lambda_gen is not None else 0.0
            gamma = pl_constant_bruteforce(problem.A, problem.x_hat, lam).gamma
        else:
            raise SystemExit(
                "rarbk needs --restart-fixed, --restart-doubling, or --kstar-gamma "
                "(the brute-force default only applies to tiny instances)")
    partition = BlockPartition.build(problem.A, blocks)
    return RestartSchedule.fixed(restart_period_kstar(blocks, partition.l_max,
                                                      float(gamma)))


def _build_configs(args, problem) -> list[RunConfig]:
    methods = [t.strip().lower() for t in str(args.method).split(",") if t.strip()]
    blocks_list = [int(t) for t in str(args.blocks).split(",") if t.strip()]
    max_epochs = args.max_epochs
    if max_epochs is None:
        max_epochs = 200 * max(problem.A.shape)
    configs = []
    for method in methods:
        for blocks in blocks_list:
            schedule = _schedule_for(args, problem, blocks) if method == "rarbk" else None
            configs.append(RunConfig(
                method=method, blocks=blocks, alpha=args.alpha, seed=int(args.seed),
                tol=float(args.tol), max_epochs=int(max_epochs),
                eval_every=int(args.eval_every), schedule=schedule))
    return configs


def cmd_run(args) -> int:
    _apply_config_file(args)
    problem = _load_or_generate(args)
    lam = problem.lambda_gen if problem.lambda_gen is not None else float(args.lam)
    potential = Sparse(lam) if lam > 0 else SquaredNorm()
    configs = _build_configs(args, problem)
    os.makedirs(args.out, exist_ok=True)

    workers = args.workers or os.cpu_count() or 1
    if len(configs) == 1 or workers == 1:
        results = [run(cfg, problem, potential) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda cfg: run(cfg, problem, potential), configs))

    writer = write_trace_csv if args.format == "csv" else write_trace_jsonl
    ext = "csv" if args.format == "csv" else "jsonl"
    summary_lines = ["label,epochs_to_tol,starred,wall_seconds"]
    print(f"{'label':<14}{'epochs-to-tol':>16}{'wall (s)':>12}")
    for res in results:
        writer(os.path.join(args.out, f"trace_{res.label}.{ext}"), res.trace)
        star = "" if res.reached_tol else "*"
        shown = res.epochs_to_tol if res.reached_tol else res.epochs_run
        print(f"{res.label:<14}{str(shown) + star:>16}{res.wall_seconds:>12.2f}")
        summary_lines.append(
            f"{res.label},{shown},{star},{_fmt(res.wall_seconds)}")
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    return 0


def cmd_verify(args) -> int:
    overrides = {}
    if args.n is not None:
        overrides["pl-bound"] = {"n": args.n}
    if args.seeds is not None:
        overrides["rates"] = {"seeds": args.seeds}
    if args.points is not None:
        overrides["fenchel"] = {"points": args.points}
    try:
        results = verify_mod.run_suites(args.suite, **overrides)
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return 2
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name:<12} {status}  {res.detail}")
        failed += 0 if res.passed else 1
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # remember which flags the user actually passed (for config-file precedence)
    args._explicit = {a.lstrip("-").replace("-", "_")
                      for a in (argv if argv is not None else sys.argv[1:])
                      if a.startswith("--")}
    if "lambda" in args._explicit:
        args._explicit.add("lam")
    _coerce_types(args)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "run":
        return cmd_run(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
