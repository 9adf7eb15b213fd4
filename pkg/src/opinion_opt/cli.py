"""Command-line entry points: the c-sweep harness and single-instance runs.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 when any run hit
the time limit.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace

from .baselines import (
    DeadlineExceeded,
    baseline_columnsum_chanplus,
    baseline_gradient_chanplus,
    baseline_gradient_init,
    local_search_unconstrained,
)
from .dynamics import SolveError, equilibrium
from .instance import change_norm, load_instance
from .optimizer import RunTrace, SolverOptions, minimize
from .projection import project
from .sweep import (
    CORNER_METHODS,
    METHODS,
    SweepConfig,
    summarize,
    sweep_from_graph,
    write_results_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_TIMEOUT = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_seeds(text: str) -> tuple:
    """A bare integer N means seeds 0..N-1; a comma list gives explicit seeds
    (write a single explicit seed with a trailing comma, e.g. '42,')."""
    text = text.strip()
    if "," in text:
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty seed list")
        return tuple(int(p) for p in parts)
    count = int(text)
    if count < 1:
        raise ValueError("seed count must be positive")
    return tuple(range(count))


def parse_c_values(text: str) -> tuple:
    values = tuple(float(p) for p in text.split(",") if p.strip())
    if not values:
        raise ValueError("empty c list")
    if any(not 0.0 <= c <= 1.0 for c in values):
        raise ValueError("c values must lie in [0, 1]")
    return values


def parse_methods(text: str) -> tuple:
    methods = tuple(m for m in text.split(",") if m)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {', '.join(unknown)}")
    return methods


def parse_stop(text: str) -> dict:
    """'rel:<threshold>' or 'grad:<epsilon>'."""
    kind, _, value = text.partition(":")
    if kind == "rel":
        return {"stop_mode": "relative_objective",
                "rel_threshold": float(value) if value else 1e-3}
    if kind == "grad":
        return {"stop_mode": "gradient_mapping",
                "epsilon": float(value) if value else 1e-6}
    raise ValueError(f"bad stop rule {text!r}; use rel:<x> or grad:<x>")


def add_solver_flags(parser):
    parser.add_argument("--eta0", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--gamma-inc", type=float, default=1.25)
    parser.add_argument("--bisect-T", type=int, default=200, dest="bisect_T")
    parser.add_argument("--stop", type=parse_stop, default="rel:1e-3")
    parser.add_argument("--max-iters", type=int, default=100_000)


def solver_from_args(args) -> SolverOptions:
    stop = args.stop if isinstance(args.stop, dict) else parse_stop(args.stop)
    return SolverOptions(eta0=args.eta0, gamma=args.gamma,
                         gamma_inc=args.gamma_inc, bisect_T=args.bisect_T,
                         max_iters=args.max_iters, **stop)


def build_parser() -> _Parser:
    parser = _Parser(prog="opinion-opt",
                     description="Budgeted opinion optimization on social networks")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run the c-sweep on a graph")
    sweep.add_argument("--graph", required=True)
    sweep.add_argument("--p", type=int, choices=(1, 2), default=1)
    sweep.add_argument("--seeds", type=parse_seeds, default="10")
    sweep.add_argument("--c", type=parse_c_values,
                       default=",".join(f"{0.1 * i:.1f}" for i in range(11)))
    sweep.add_argument("--methods", type=parse_methods, default=",".join(METHODS))
    sweep.add_argument("--time-limit", type=float, default=1800.0)
    sweep.add_argument("--out", default=".")
    add_solver_flags(sweep)

    solve = sub.add_parser("solve", help="run one method on a serialized instance")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--method", required=True, choices=METHODS)
    solve.add_argument("--time-limit", type=float, default=1800.0)
    solve.add_argument("--trace", default=None,
                       help="write the per-iteration trace CSV here")
    add_solver_flags(solve)
    return parser


def cmd_sweep(args) -> int:
    config = SweepConfig(graph_path=args.graph, p=args.p, seeds=args.seeds,
                         c_values=args.c, methods=args.methods,
                         time_limit=args.time_limit,
                         solver=solver_from_args(args))
    rows, any_timeout = sweep_from_graph(config)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, "results.csv")
    summary_path = os.path.join(args.out, "summary.csv")
    write_results_csv(rows, results_path)
    summarize(results_path, summary_path)
    print(f"wrote {results_path} ({len(rows)} rows)")
    print(f"wrote {summary_path}")
    return EXIT_TIMEOUT if any_timeout else EXIT_OK


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    solver = solver_from_args(args)
    limit = args.time_limit
    t0 = time.perf_counter()
    trace = None
    try:
        if args.method in CORNER_METHODS:
            corner = local_search_unconstrained(instance, deadline=t0 + limit)
        if args.method == "pgm_chanplus_start":
            start = project(corner.values, instance, solver.bisect_T)
        elif args.method == "pgm_init_start":
            start = instance.alpha_init

        if args.method.startswith("pgm"):
            budget = limit - (time.perf_counter() - t0)
            if budget <= 0:
                raise DeadlineExceeded("time limit hit")
            res = minimize(instance, start, replace(solver, time_limit=budget))
            status = "timeout" if res.status == "time_limit" else "ok"
            objective = (res.trace.objectives[-1] if len(res.trace)
                         else res.initial_objective)
            iters = len(res.trace)
            trace = res.trace
            alpha = res.alpha
        else:
            if args.method == "grad_chanplus":
                out = baseline_gradient_chanplus(instance, corner, deadline=t0 + limit)
            elif args.method == "grad_init":
                out = baseline_gradient_init(instance, deadline=t0 + limit)
            else:
                out = baseline_columnsum_chanplus(instance, corner, deadline=t0 + limit)
            alpha = out.alpha
            objective = equilibrium(instance, alpha).objective
            status = "ok"
            iters = out.moves
    except DeadlineExceeded:
        seconds = time.perf_counter() - t0
        print(f"method={args.method} objective=nan seconds={seconds!r} "
              f"iters=0 status=timeout")
        return EXIT_TIMEOUT
    seconds = time.perf_counter() - t0

    if args.trace is not None:
        if trace is None:
            # baselines summarize as a single trace row
            trace = RunTrace()
            trace.append(1, float(objective), float("nan"), 0, float("nan"),
                         instance.k - change_norm(instance, alpha), seconds)
        trace.to_csv(args.trace)

    print(f"method={args.method} objective={float(objective)!r} "
          f"seconds={seconds!r} iters={iters} status={status}")
    return EXIT_TIMEOUT if status == "timeout" else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_solve(args)
    except (OSError, ValueError, RuntimeError, SolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
