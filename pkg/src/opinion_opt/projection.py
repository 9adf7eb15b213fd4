"""Projection onto C = {alpha : ||alpha - alpha_init||_p <= k, l <= alpha <= u}.

The projection splits the constraint into g1 (the lp-ball penalty, closed-form
prox for p in {1, 2}) and g2 (the box indicator, a clamp), then bisects the
prox parameter lambda until the boxed prox lands inside the ball. Feasibility
of the boxed prox is monotone non-decreasing in lambda, which makes bisection
sound.
"""
from __future__ import annotations

import numpy as np

from .instance import Instance, change_norm

BISECT_FEAS_TOL = 1e-12
DEFAULT_BISECT_T = 200


def project_box(alpha: np.ndarray, l: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Elementwise clamp to [l, u]."""
    if np.any(l > u):
        raise ValueError("need l <= u elementwise")
    return np.clip(alpha, l, u)


def prox_g1(alpha: np.ndarray, lam: float, instance: Instance) -> np.ndarray:
    """Closed-form prox of lam * ||. - alpha_init||_p^p.

    p=1: shrink each coordinate toward alpha_init by lam, never crossing it.
    p=2: pull toward alpha_init by the factor 1/(2 lam + 1).
    """
    if lam < 0:
        raise ValueError("prox parameter must be nonnegative")
    init = instance.alpha_init
    if instance.p == 1:
        return np.where(alpha >= init,
                        np.maximum(alpha - lam, init),
                        np.minimum(alpha + lam, init))
    if instance.p == 2:
        return init + (alpha - init) / (2.0 * lam + 1.0)
    raise ValueError(f"unsupported norm order p = {instance.p}")


def lambda_upper_bound(alpha: np.ndarray, instance: Instance) -> float:
    """A lambda at which the boxed prox is guaranteed feasible.

    p=1: the max shrink distance ||alpha - alpha_init||_inf collapses the prox
    onto alpha_init itself. p=2: the smallest contraction that lands exactly
    on the radius-k sphere (needs k > 0; k = 0 is short-circuited upstream).
    """
    d = alpha - instance.alpha_init
    if instance.p == 1:
        return float(np.max(np.abs(d)))
    if instance.k <= 0.0:
        raise ValueError("p = 2 bound needs k > 0")
    return max(0.0, (float(np.linalg.norm(d)) / instance.k - 1.0) / 2.0)


def project(alpha: np.ndarray, instance: Instance, T: int = DEFAULT_BISECT_T) -> np.ndarray:
    """Euclidean projection of alpha onto C, exact up to bisection depth T.

    Early-exits when the box clamp alone is already inside the ball. Otherwise
    bisects lambda on [0, lambda_upper_bound] keeping the right endpoint
    feasible, and returns the boxed prox at the right endpoint, so the output
    is feasible by construction.
    """
    if instance.k < 0:
        raise ValueError("budget k must be nonnegative")
    if T < 1:
        raise ValueError("bisection depth must be at least 1")
    if instance.k == 0.0:
        return instance.alpha_init.copy()

    def boxed_prox(lam: float) -> np.ndarray:
        return project_box(prox_g1(alpha, lam, instance), instance.l, instance.u)

    def ball_ok(point: np.ndarray) -> bool:
        return change_norm(instance, point) <= instance.k + BISECT_FEAS_TOL

    candidate = boxed_prox(0.0)
    if ball_ok(candidate):
        return candidate

    hi = lambda_upper_bound(alpha, instance)
    if not ball_ok(boxed_prox(hi)):
        raise AssertionError("bound violated: prox at the upper bound left the ball")
    lo = 0.0
    for _ in range(T):
        mid = 0.5 * (lo + hi)
        if ball_ok(boxed_prox(mid)):
            hi = mid
        else:
            lo = mid
    return boxed_prox(hi)
