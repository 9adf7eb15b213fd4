"""Corner local search and the three greedy budget heuristics.

local_search_unconstrained solves the box-only problem, whose optima sit at
corners (alpha_i is l_i or u_i) and where any local optimum is global. The
three baselines then pull that corner (or alpha_init) into the budget ball:
two gradient-guided single-coordinate greedies and one column-sum order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dynamics import build_system, equilibrium, gradient
from .instance import Instance, change_norm

DENSE_ENGINE_MAX_N = 4000
REFRESH_EVERY = 200
STRICT_DECREASE_TOL = 1e-12


@dataclass(frozen=True)
class CornerSolution:
    values: np.ndarray
    objective: float
    moves: int


@dataclass(frozen=True)
class BaselineResult:
    alpha: np.ndarray
    moves: int


class DeadlineExceeded(TimeoutError):
    pass


def _check_deadline(deadline):
    if deadline is not None and time.perf_counter() > deadline:
        raise DeadlineExceeded("time limit hit")


def nearest_corner(instance: Instance) -> np.ndarray:
    """Per coordinate: the closer of l_i / u_i to alpha_init_i, ties to l_i."""
    lo = instance.alpha_init - instance.l
    hi = instance.u - instance.alpha_init
    return np.where(lo <= hi, instance.l, instance.u)


def local_search_unconstrained(instance: Instance,
                               deadline: float | None = None) -> CornerSolution:
    """Steepest single-coordinate descent over box corners.

    Keeps a dense inverse of M updated by rank-one (Sherman-Morrison) steps,
    so scoring all n candidate switches costs O(n^2 + |E|) per round instead
    of n linear solves. The inverse is rebuilt periodically to shed rounding
    drift, and the reported objective comes from a fresh solve at the end.
    """
    n = instance.n
    if n > DENSE_ENGINE_MAX_N:
        raise ValueError(f"dense local-search engine supports n <= {DENSE_ENGINE_MAX_N}")
    P = instance.P.tocsr()
    s = instance.s
    alpha = nearest_corner(instance)
    other = np.where(alpha == instance.l, instance.u, instance.l)

    def rebuild():
        Minv_ = np.linalg.inv(build_system(instance, alpha).toarray())
        z_ = Minv_ @ (alpha * s)
        v_ = Minv_.sum(axis=0)
        g_ = np.asarray(P.multiply(Minv_.T).sum(axis=1)).ravel()
        return Minv_, z_, v_, g_

    Minv, z, v, g = rebuild()
    moves = 0
    while True:
        _check_deadline(deadline)
        delta = other - alpha
        Pz = P @ z
        # objective change of switching coordinate i, via rank-one update of M
        denom = 1.0 + delta * g
        gain = delta * v * (s - (Pz + delta * s * g) / denom)
        i = int(np.argmin(gain))
        if not gain[i] < -STRICT_DECREASE_TOL:
            break
        d = float(delta[i])
        alpha = alpha.copy()
        alpha[i], other[i] = other[i], alpha[i]
        moves += 1
        if moves % REFRESH_EVERY == 0:
            Minv, z, v, g = rebuild()
            continue
        a_col = Minv[:, i].copy()
        b_row = P.getrow(i) @ Minv
        Minv -= (d / denom[i]) * np.outer(a_col, b_row)
        z = Minv @ (alpha * s)
        v = Minv.sum(axis=0)
        g = np.asarray(P.multiply(Minv.T).sum(axis=1)).ravel()

    final = equilibrium(instance, alpha)
    return CornerSolution(values=alpha, objective=final.objective, moves=moves)


def baseline_gradient_chanplus(instance: Instance, corner: CornerSolution,
                               deadline: float | None = None) -> BaselineResult:
    """From the corner solution, reset the vertex with the flattest gradient
    to its initial resistance until the budget constraint holds."""
    alpha = corner.values.copy()
    unselected = np.ones(instance.n, dtype=bool)
    moves = 0
    while change_norm(instance, alpha) > instance.k:
        _check_deadline(deadline)
        grad, _ = gradient(instance, alpha)
        score = np.abs(grad)
        score[~unselected] = np.inf
        v = int(np.argmin(score))
        alpha[v] = instance.alpha_init[v]
        unselected[v] = False
        moves += 1
    return BaselineResult(alpha=alpha, moves=moves)


def baseline_gradient_init(instance: Instance,
                           deadline: float | None = None) -> BaselineResult:
    """From alpha_init, push the steepest coordinate to its bound; stop just
    before the first move that would leave the budget ball."""
    alpha = instance.alpha_init.copy()
    unselected = np.ones(instance.n, dtype=bool)
    moves = 0
    while unselected.any():
        _check_deadline(deadline)
        grad, _ = gradient(instance, alpha)
        score = np.abs(grad)
        score[~unselected] = -np.inf
        v = int(np.argmax(score))
        candidate = alpha.copy()
        candidate[v] = instance.l[v] if grad[v] >= 0.0 else instance.u[v]
        if change_norm(instance, candidate) > instance.k:
            return BaselineResult(alpha=alpha, moves=moves)
        alpha = candidate
        unselected[v] = False
        moves += 1
    return BaselineResult(alpha=alpha, moves=moves)


def baseline_columnsum_chanplus(instance: Instance, corner: CornerSolution,
                                deadline: float | None = None) -> BaselineResult:
    """Gradient-free variant: reset vertices in ascending column-sum order
    until the budget constraint holds."""
    order = np.argsort(instance.P.column_sums(), kind="stable")
    alpha = corner.values.copy()
    moves = 0
    for v in order:
        if change_norm(instance, alpha) <= instance.k:
            break
        _check_deadline(deadline)
        alpha[v] = instance.alpha_init[v]
        moves += 1
    return BaselineResult(alpha=alpha, moves=moves)
