"""Opinion dynamics: equilibrium computation, objective value, gradient.

The objective f(alpha) = sum_i z_i(alpha) where z solves M z = Diag(alpha) s
with M = I - Diag(1 - alpha) P. The production path solves these systems with
BiCG; a dense factorization path exists below DENSE_THRESHOLD for diagnostics
(Hessian, Lipschitz estimate) and for test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .instance import Instance

DENSE_THRESHOLD = 500
DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class LinearSolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool


@dataclass(frozen=True)
class EquilibriumResult:
    z: np.ndarray
    objective: float
    report: LinearSolveReport


class SolveError(RuntimeError):
    """Linear solver failed to converge; carries the offending report(s)."""

    def __init__(self, message: str, reports):
        super().__init__(message)
        self.reports = reports


def build_system(instance: Instance, alpha: np.ndarray) -> sp.csr_matrix:
    """M = I - Diag(1 - alpha) P, the matrix behind every solve here."""
    P = instance.P.tocsr()
    scaled = P.multiply((1.0 - alpha)[:, None])
    return (sp.eye(instance.n, format="csr") - scaled).tocsr()


def solve_sparse(A: sp.csr_matrix, b: np.ndarray, *, rtol: float = DEFAULT_RTOL,
                 maxiter: int | None = None, precondition: str | None = None,
                 strict: bool = True) -> tuple[np.ndarray, LinearSolveReport]:
    """BiCG solve of A x = b with zero initial guess.

    maxiter defaults to 10n. BiCG breakdown (possible arbitrarily close to
    the target residual) gets up to two fresh starts, warm ones when the
    current iterate is usable. strict=False returns the last iterate instead
    of raising when the iteration budget runs out (used for fixed-work
    timing); an exhausted budget is never retried.
    """
    n = b.shape[0]
    if maxiter is None:
        maxiter = 10 * n
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), LinearSolveReport(0, 0.0, True)
    M_op = None
    if precondition == "jacobi":
        d = A.diagonal()
        if np.any(d == 0.0):
            raise ValueError("jacobi preconditioner needs a nonzero diagonal")
        # BiCG applies the preconditioner to both A and A^T systems
        M_op = spla.LinearOperator(A.shape, matvec=lambda r: r / d,
                                   rmatvec=lambda r: r / d, dtype=np.float64)
    elif precondition is not None:
        raise ValueError(f"unknown preconditioner {precondition!r}")

    count = [0]

    def cb(_xk):
        count[0] += 1

    def rel_res(x):
        return float(np.linalg.norm(b - A @ x)) / b_norm

    x, info = spla.bicg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=M_op,
                        callback=cb)
    residual = rel_res(x)
    # info < 0 is breakdown, info = 0 can still hide recurrence-residual
    # drift; both deserve a restart. info > 0 means the iteration budget ran
    # out, which is already the honest answer for the work allowed.
    retries = 0
    while not residual <= rtol and info <= 0 and retries < 2:
        if np.all(np.isfinite(x)) and residual < 1.0:
            x0 = x  # warm restart resets the BiCG shadow sequence
        else:
            x0 = 1e-8 * np.random.default_rng(retries).standard_normal(n)
        x, info = spla.bicg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter,
                            M=M_op, callback=cb)
        residual = rel_res(x)
        retries += 1
    converged = residual <= rtol
    report = LinearSolveReport(count[0], residual, converged)
    if not converged and strict:
        raise SolveError(
            f"BiCG stalled at relative residual {residual:.3e} "
            f"after {count[0]} iterations", (report,))
    return x, report


def simulate_dynamics(instance: Instance, alpha: np.ndarray, t_max: int) -> np.ndarray:
    """Iterate z <- Diag(alpha) s + Diag(1-alpha) P z for t_max steps from z = s."""
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    P = instance.P.tocsr()
    a_s = alpha * instance.s
    one_minus = 1.0 - alpha
    z = instance.s.copy()
    for _ in range(t_max):
        z = a_s + one_minus * (P @ z)
    return z


def equilibrium(instance: Instance, alpha: np.ndarray, **solver_kw) -> EquilibriumResult:
    """Equilibrium opinions and their sum, via one sparse solve."""
    M = build_system(instance, alpha)
    z, report = solve_sparse(M, alpha * instance.s, **solver_kw)
    return EquilibriumResult(z=z, objective=float(np.sum(z)), report=report)


def objective(instance: Instance, alpha: np.ndarray, **solver_kw) -> float:
    return equilibrium(instance, alpha, **solver_kw).objective


def gradient(instance: Instance, alpha: np.ndarray, **solver_kw):
    """Gradient of f in two sparse solves.

    v solves M^T v = 1 and z solves M z = Diag(alpha) s; then
    grad_i = v_i (s_i - (P z)_i). Returns (grad, (report_v, report_z)).
    """
    _, grad, reports = objective_and_gradient(instance, alpha, **solver_kw)
    return grad, reports


def objective_and_gradient(instance: Instance, alpha: np.ndarray, **solver_kw):
    """(f, grad, reports) sharing the z solve between value and gradient."""
    M = build_system(instance, alpha)
    P = instance.P.tocsr()
    try:
        v, rep_v = solve_sparse(M.T.tocsr(), np.ones(instance.n), **solver_kw)
        z, rep_z = solve_sparse(M, alpha * instance.s, **solver_kw)
    except SolveError as e:
        raise SolveError(f"gradient solve failed: {e}", e.reports) from None
    grad = v * (instance.s - P @ z)
    return float(np.sum(z)), grad, (rep_v, rep_z)


# Dense diagnostics. Everything below is O(n^2)-O(n^3) and guarded by
# DENSE_THRESHOLD; the optimizer never calls these.

def _require_dense(n: int):
    if n > DENSE_THRESHOLD:
        raise ValueError(f"dense-only diagnostic: n = {n} exceeds {DENSE_THRESHOLD}")


def dense_objective(instance: Instance, alpha: np.ndarray) -> float:
    """Direct-solve objective, the oracle twin of objective()."""
    _require_dense(instance.n)
    M = build_system(instance, alpha).toarray()
    return float(np.sum(np.linalg.solve(M, alpha * instance.s)))


def hessian_dense(instance: Instance, alpha: np.ndarray) -> np.ndarray:
    """Symmetric Hessian of f at alpha via a dense factorization of M.

    With v = M^{-T} 1, z = M^{-1} Diag(alpha) s and
    C = Diag(v) (P M^{-1}) Diag(s - P z), the Hessian is -(C + C^T).
    """
    _require_dense(instance.n)
    M = build_system(instance, alpha).toarray()
    P = instance.P.toarray()
    v = np.linalg.solve(M.T, np.ones(instance.n))
    z = np.linalg.solve(M, alpha * instance.s)
    PMinv = np.linalg.solve(M.T, P.T).T
    C = v[:, None] * PMinv * (instance.s - P @ z)[None, :]
    return -(C + C.T)


def spectral_norm(H: np.ndarray, steps: int = 100, seed: int = 0) -> float:
    """Largest |eigenvalue| of a symmetric matrix by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(H.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(steps):
        y = H @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam = norm
        x = y / norm
    return float(lam)


def estimate_lipschitz(instance: Instance, sample_count: int, seed: int = 0) -> float:
    """Empirical gradient-Lipschitz estimate: max spectral norm of the Hessian
    over sample_count points of [l, u].

    The first sample is always alpha_init; the rest are uniform draws, taken
    one at a time so growing sample_count only adds points. A lower estimate
    of the true constant, for diagnostics and step-size sanity checks only.
    """
    _require_dense(instance.n)
    if sample_count < 1:
        raise ValueError("needs at least one sample")
    rng = np.random.default_rng(seed)
    best = spectral_norm(hessian_dense(instance, instance.alpha_init))
    for _ in range(sample_count - 1):
        alpha = rng.uniform(instance.l, instance.u)
        best = max(best, spectral_norm(hessian_dense(instance, alpha)))
    return best
