"""Projected gradient descent with backtracking line search.

Each outer iteration takes one transpose solve for the gradient (the forward
solve is inherited from the accepted objective evaluation) plus one projection
and one equilibrium solve per backtracking attempt. The stepsize shrinks by
gamma until the sufficient-decrease condition holds and grows by gamma_inc
after every outer iteration.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import build_system, equilibrium, gradient, solve_sparse
from .instance import Instance, change_norm, is_feasible
from .projection import DEFAULT_BISECT_T, project

INNER_BACKTRACK_CAP = 200
DEFAULT_MAX_ITERS = 100_000


@dataclass(frozen=True)
class SolverOptions:
    eta0: float = 1.0
    gamma: float = 0.5
    gamma_inc: float = 1.25
    epsilon: float = 1e-6
    bisect_T: int = DEFAULT_BISECT_T
    stop_mode: str = "relative_objective"
    rel_threshold: float = 1e-3
    max_iters: int = DEFAULT_MAX_ITERS
    time_limit: float | None = None

    def __post_init__(self):
        if self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.gamma_inc < 1.0:
            raise ValueError("gamma_inc must be at least 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.bisect_T < 1 or self.max_iters < 1:
            raise ValueError("bisect_T and max_iters must be at least 1")
        if self.stop_mode not in ("gradient_mapping", "relative_objective"):
            raise ValueError(f"unknown stop_mode {self.stop_mode!r}")
        if self.rel_threshold <= 0.0:
            raise ValueError("rel_threshold must be positive")
        if self.time_limit is not None and self.time_limit <= 0.0:
            raise ValueError("time_limit must be positive when set")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunTrace:
    """Per-iteration log: objective, stepsize, backtracks, gradient-mapping
    norm, budget slack, cumulative seconds."""

    rows: list = field(default_factory=list)

    def append(self, iter_, objective, eta, backtracks, grad_map_norm, slack, seconds):
        self.rows.append((iter_, objective, eta, backtracks, grad_map_norm, slack, seconds))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = ("iter", "objective", "eta", "backtracks", "grad_map_norm",
               "slack", "seconds").index(name)
        return np.array([row[idx] for row in self.rows])

    @property
    def objectives(self) -> np.ndarray:
        return self.column("objective")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("iter,objective,eta,backtracks,grad_map_norm,slack,seconds\n")
            for it, f, eta, bt, gmn, slack, sec in self.rows:
                fh.write(f"{it},{_fmt(f)},{_fmt(eta)},{bt},{_fmt(gmn)},"
                         f"{_fmt(slack)},{_fmt(sec)}\n")


@dataclass(frozen=True)
class MinimizeResult:
    alpha: np.ndarray
    trace: RunTrace
    status: str  # converged | max_iters | time_limit
    initial_objective: float


def gradient_mapping_norm(alpha: np.ndarray, eta: float, instance: Instance,
                          bisect_T: int = DEFAULT_BISECT_T) -> float:
    """||(alpha - alpha_plus) / eta||_2 with alpha_plus one projected step."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    grad, _ = gradient(instance, alpha)
    plus = project(alpha - eta * grad, instance, bisect_T)
    return float(np.linalg.norm((alpha - plus) / eta))


def minimize(instance: Instance, alpha0: np.ndarray | None = None,
             options: SolverOptions | None = None) -> MinimizeResult:
    """Run projected gradient from alpha0 (default: the instance's initial
    resistances) until the configured stop rule, max_iters, or time_limit.

    Stop rules: gradient_mapping returns the previous iterate once the step
    is within eta * epsilon; relative_objective returns the current iterate
    once the relative decrease drops to rel_threshold. Every emitted iterate
    is feasible and every accepted step passes sufficient decrease.
    """
    opts = options if options is not None else SolverOptions()
    alpha = np.array(instance.alpha_init if alpha0 is None else alpha0, dtype=float)
    if not is_feasible(instance, alpha):
        raise ValueError("starting point is infeasible")
    t_start = time.perf_counter()
    P = instance.P.tocsr()
    ones = np.ones(instance.n)

    first = equilibrium(instance, alpha)
    initial_objective = first.objective
    f_prev, z_prev = first.objective, first.z
    eta = opts.eta0
    trace = RunTrace()
    status = "max_iters"

    for t in range(1, opts.max_iters + 1):
        if f_prev == 0.0:
            # nonnegative objective: nothing left to minimize
            status = "converged"
            break
        M = build_system(instance, alpha)
        v, _ = solve_sparse(M.T.tocsr(), ones)
        grad = v * (instance.s - P @ z_prev)

        backtracks = 0
        while True:
            cand = project(alpha - eta * grad, instance, opts.bisect_T)
            res = equilibrium(instance, cand)
            step = cand - alpha
            step_sq = float(step @ step)
            if res.objective <= f_prev - step_sq / (2.0 * eta):
                break
            eta *= opts.gamma
            backtracks += 1
            if backtracks > INNER_BACKTRACK_CAP:
                raise RuntimeError("stepsize underflow: sufficient decrease "
                                   f"unreachable after {INNER_BACKTRACK_CAP} shrinks")

        step_norm = float(np.sqrt(step_sq))
        trace.append(t, res.objective, eta, backtracks, step_norm / eta,
                     instance.k - change_norm(instance, cand),
                     time.perf_counter() - t_start)

        if opts.stop_mode == "gradient_mapping":
            if step_norm <= eta * opts.epsilon:
                status = "converged"  # certificate holds at the previous iterate
                break
        else:
            if (f_prev - res.objective) / f_prev <= opts.rel_threshold:
                alpha, f_prev = cand, res.objective
                status = "converged"
                break
        alpha, f_prev, z_prev = cand, res.objective, res.z
        if opts.time_limit is not None and time.perf_counter() - t_start > opts.time_limit:
            status = "time_limit"
            break
        eta *= opts.gamma_inc

    return MinimizeResult(alpha=alpha, trace=trace, status=status,
                          initial_objective=initial_objective)
