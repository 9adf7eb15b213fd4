"""Experiment harness: seeded instance generation, the c-sweep over all
methods with per-method time limits, and CSV reporting.

For each seed the corner solution alpha_chanplus is computed once; its
distance to alpha_init defines k' and every c in the sweep runs with budget
k = c * k'. Wall time reported for corner-started methods includes the corner
computation itself. Methods that exceed the time limit are marked `timeout`;
grad_chanplus walks c downward and skips smaller c after a timeout, while
grad_init walks upward and skips larger c (status `skipped`).
"""
from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import (
    DeadlineExceeded,
    baseline_columnsum_chanplus,
    baseline_gradient_chanplus,
    baseline_gradient_init,
    local_search_unconstrained,
)
from .dynamics import equilibrium
from .instance import Instance, budget_from_reference, change_norm, load_edge_list
from .optimizer import SolverOptions, minimize
from .projection import project

METHODS = ("pgm_chanplus_start", "pgm_init_start", "grad_chanplus",
           "grad_init", "columnsum")
CORNER_METHODS = ("pgm_chanplus_start", "grad_chanplus", "columnsum")
DEFAULT_C_VALUES = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_TIME_LIMIT = 1800.0


@dataclass(frozen=True)
class SweepConfig:
    graph_path: str
    p: int = 1
    seeds: tuple = tuple(range(10))
    c_values: tuple = DEFAULT_C_VALUES
    methods: tuple = METHODS
    time_limit: float = DEFAULT_TIME_LIMIT
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("duplicate seeds")
        if not self.c_values:
            raise ValueError("need at least one c value")
        if any(not 0.0 <= c <= 1.0 for c in self.c_values):
            raise ValueError("c values must lie in [0, 1]")
        object.__setattr__(self, "c_values", tuple(sorted(set(self.c_values))))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {', '.join(unknown)}")
        if not self.methods:
            raise ValueError("need at least one method")
        if self.time_limit <= 0.0:
            raise ValueError("time limit must be positive")


@dataclass(frozen=True)
class SweepRow:
    graph: str
    seed: int
    p: int
    c: float
    method: str
    objective: float
    seconds: float
    iters: int
    status: str  # ok | timeout | skipped


def _pgm_row(instance: Instance, start: np.ndarray, solver: SolverOptions,
             budget: float, seconds_offset: float):
    t0 = time.perf_counter()
    opts = replace(solver, time_limit=budget)
    res = minimize(instance, start, opts)
    elapsed = time.perf_counter() - t0
    if res.status == "time_limit":
        return float("nan"), seconds_offset + elapsed, len(res.trace), "timeout"
    obj = res.trace.objectives[-1] if len(res.trace) else res.initial_objective
    return float(obj), seconds_offset + elapsed, len(res.trace), "ok"


def _baseline_row(fn, budget: float, seconds_offset: float):
    t0 = time.perf_counter()
    try:
        result, instance = fn(t0 + budget)
        obj = equilibrium(instance, result.alpha).objective
    except DeadlineExceeded:
        return float("nan"), seconds_offset + (time.perf_counter() - t0), 0, "timeout"
    elapsed = time.perf_counter() - t0
    return float(obj), seconds_offset + elapsed, result.moves, "ok"


def run_sweep(config: SweepConfig, generate):
    """Execute the sweep; `generate` maps a seed to a budgetless Instance.

    Returns (rows, any_timeout). Row order is deterministic: seed by position
    in config.seeds, then c ascending, then method by position in METHODS.
    """
    rows: list[SweepRow] = []
    graph_name = os.path.basename(str(config.graph_path))
    any_timeout = False

    for seed in config.seeds:
        inst0 = generate(seed)
        # k' needs the corner solution no matter which methods run
        t0 = time.perf_counter()
        try:
            corner = local_search_unconstrained(inst0, deadline=t0 + config.time_limit)
            t_corner = time.perf_counter() - t0
            kprime = change_norm(inst0, corner.values)
        except DeadlineExceeded:
            corner = None

        if corner is None:
            # the whole seed is unrunnable without k'
            any_timeout = True
            for c in config.c_values:
                for method in config.methods:
                    rows.append(SweepRow(graph_name, seed, config.p, c, method,
                                         float("nan"), config.time_limit, 0,
                                         "timeout"))
            continue

        for method in config.methods:
            order = (tuple(reversed(config.c_values))
                     if method == "grad_chanplus" else config.c_values)
            skipping = False
            for c in order:
                if skipping:
                    rows.append(SweepRow(graph_name, seed, config.p, c, method,
                                         float("nan"), float("nan"), 0, "skipped"))
                    continue
                inst = inst0.with_budget(c * kprime)
                uses_corner = method in CORNER_METHODS
                offset = t_corner if uses_corner else 0.0
                budget = config.time_limit - offset
                if budget <= 0.0:
                    obj, secs, iters, status = (float("nan"), offset, 0, "timeout")
                elif method == "pgm_chanplus_start":
                    start = project(corner.values, inst, config.solver.bisect_T)
                    obj, secs, iters, status = _pgm_row(
                        inst, start, config.solver, budget, offset)
                elif method == "pgm_init_start":
                    obj, secs, iters, status = _pgm_row(
                        inst, inst.alpha_init, config.solver, budget, offset)
                elif method == "grad_chanplus":
                    obj, secs, iters, status = _baseline_row(
                        lambda dl, i=inst: (baseline_gradient_chanplus(i, corner, dl), i),
                        budget, offset)
                elif method == "grad_init":
                    obj, secs, iters, status = _baseline_row(
                        lambda dl, i=inst: (baseline_gradient_init(i, dl), i),
                        budget, offset)
                else:
                    obj, secs, iters, status = _baseline_row(
                        lambda dl, i=inst: (baseline_columnsum_chanplus(i, corner, dl), i),
                        budget, offset)
                rows.append(SweepRow(graph_name, seed, config.p, c, method,
                                     obj, secs, iters, status))
                if status == "timeout":
                    any_timeout = True
                    if method in ("grad_chanplus", "grad_init"):
                        skipping = True

    seed_pos = {s: i for i, s in enumerate(config.seeds)}
    method_pos = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (seed_pos[r.seed], r.c, method_pos[r.method]))
    return rows, any_timeout


def sweep_from_graph(config: SweepConfig):
    """Load the graph once, then run the sweep with the standard generator."""
    from .instance import generate_instance
    graph = load_edge_list(config.graph_path)

    def generate(seed):
        return generate_instance(graph, seed, p=config.p)

    return run_sweep(config, generate)


RESULTS_HEADER = "graph,seed,p,c,method,objective,seconds,iters,status"


def write_results_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.graph},{r.seed},{r.p},{r.c!r},{r.method},"
                     f"{r.objective!r},{r.seconds!r},{r.iters},{r.status}\n")


def summarize(results_path, out_path) -> list:
    """Aggregate a results CSV: mean objective and seconds per (method, c)
    over seeds, dropping any cell where some seed failed to complete."""
    cells: dict = {}
    with open(results_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULTS_HEADER.split(","):
            raise ValueError(f"row 1: unexpected header {header}")
        for i, row in enumerate(reader, start=2):
            if len(row) != 9:
                raise ValueError(f"row {i}: expected 9 fields, got {len(row)}")
            try:
                c = float(row[3])
                objective = float(row[5])
                seconds = float(row[6])
            except ValueError:
                raise ValueError(f"row {i}: malformed numeric field") from None
            method, status = row[4], row[8]
            cells.setdefault((method, c), []).append((objective, seconds, status))

    method_rank = {m: i for i, m in enumerate(METHODS)}
    summary = []
    for (method, c), entries in cells.items():
        if any(status != "ok" for _, _, status in entries):
            continue
        mean_obj = float(np.mean([o for o, _, _ in entries]))
        mean_sec = float(np.mean([s for _, s, _ in entries]))
        summary.append((method, c, mean_obj, mean_sec))
    summary.sort(key=lambda t: (method_rank.get(t[0], len(METHODS)), t[1]))

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method,c,mean_objective,mean_seconds\n")
        for method, c, mo, ms in summary:
            fh.write(f"{method},{c!r},{mo!r},{ms!r}\n")
    return summary
