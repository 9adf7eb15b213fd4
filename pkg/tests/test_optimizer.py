import itertools
import types

import numpy as np
import numpy.testing as npt
import pytest

import opinion_opt.optimizer as optimizer_module
from helpers import random_instance, two_node_instance, two_node_objective_closed_form
from opinion_opt.dynamics import dense_objective, estimate_lipschitz
from opinion_opt.instance import change_norm, is_feasible
from opinion_opt.optimizer import (
    MinimizeResult,
    RunTrace,
    SolverOptions,
    gradient_mapping_norm,
    minimize,
)


def check_trace_shape(result: MinimizeResult):
    obj = result.trace.objectives
    gmn = result.trace.column("grad_map_norm")
    diffs = np.diff(obj)
    if len(diffs):
        # strict decrease across accepted iterations; the terminal row may tie
        # when its step is numerically zero (that row is the stop certificate)
        assert np.all(diffs[:-1] < 0)
        assert diffs[-1] < 0 or (diffs[-1] == 0 and gmn[-1] <= 1e-12)
    assert np.all(result.trace.column("slack") >= -1e-9)


def test_gradient_mapping_norm_zero_on_singleton_set():
    inst = two_node_instance(k=0.0)
    assert gradient_mapping_norm(inst.alpha_init.copy(), 1.0, inst) == 0.0
    assert gradient_mapping_norm(inst.alpha_init.copy(), 0.01, inst) == 0.0


def test_gradient_mapping_norm_nonincreasing_in_eta():
    rng = np.random.default_rng(0)
    etas = np.logspace(-3, 1, 10)
    for trial in range(20):
        inst = random_instance(12, seed=trial, k=0.4)
        alpha = np.clip(rng.uniform(inst.l, inst.u), None, None)
        from opinion_opt.projection import project
        alpha = project(alpha, inst)
        norms = [gradient_mapping_norm(alpha, float(e), inst) for e in etas]
        assert all(a >= b - 1e-9 for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("mode", ["gradient_mapping", "relative_objective"])
def test_minimize_zero_budget_stops_after_one_iteration(mode):
    inst = two_node_instance(k=0.0)
    res = minimize(inst, options=SolverOptions(stop_mode=mode))
    npt.assert_array_equal(res.alpha, inst.alpha_init)
    assert len(res.trace) == 1
    assert res.status == "converged"


def test_minimize_two_node_matches_grid_oracle():
    inst = two_node_instance()  # generous k: box-only problem
    opts = SolverOptions(stop_mode="gradient_mapping", epsilon=1e-8)
    res = minimize(inst, options=opts)
    eta_final = float(res.trace.column("eta")[-1])
    assert gradient_mapping_norm(res.alpha, eta_final, inst) <= 1e-8 + 1e-9

    # closed-form objective on a 10^3 x 10^3 grid of the box
    a1 = np.linspace(inst.l[0], inst.u[0], 1000)
    a2 = np.linspace(inst.l[1], inst.u[1], 1000)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    F = two_node_objective_closed_form(inst.s, A1, A2)
    grid_min = float(F.min())
    final_obj = float(res.trace.objectives[-1])
    assert abs(final_obj - grid_min) <= 1e-4
    assert is_feasible(inst, res.alpha)


@pytest.mark.parametrize("mode,p", [("gradient_mapping", 1), ("gradient_mapping", 2),
                                    ("relative_objective", 1), ("relative_objective", 2)])
def test_minimize_trace_invariants_on_random_instances(mode, p):
    for seed in range(3):
        inst = random_instance(30, seed=40 + seed, k=0.8, p=p)
        opts = SolverOptions(stop_mode=mode, epsilon=1e-5)
        res = minimize(inst, options=opts)
        assert res.status == "converged"
        check_trace_shape(res)
        assert is_feasible(inst, res.alpha)


def test_minimize_rechecks_sufficient_decrease_from_trace():
    inst = random_instance(25, seed=7, k=0.6)
    res = minimize(inst, options=SolverOptions(stop_mode="gradient_mapping", epsilon=1e-6))
    objs = np.concatenate([[res.initial_objective], res.trace.objectives])
    etas = res.trace.column("eta")
    gmns = res.trace.column("grad_map_norm")
    for t in range(len(res.trace)):
        step_sq = (gmns[t] * etas[t]) ** 2
        bound = objs[t] - step_sq / (2.0 * etas[t])
        assert objs[t + 1] <= bound + 1e-12 * abs(objs[t])


def test_minimize_stepsize_floor_without_heuristic():
    # gamma_inc = 1 keeps the classical stepsize floor min{eta0, gamma/L}
    inst = random_instance(60, seed=3, k=1.5)
    L = estimate_lipschitz(inst, 30)
    opts = SolverOptions(stop_mode="gradient_mapping", epsilon=1e-6, gamma_inc=1.0)
    res = minimize(inst, options=opts)
    floor = min(opts.eta0, opts.gamma / L)
    assert np.all(res.trace.column("eta") >= floor * (1 - 1e-9))


def test_minimize_iteration_count_within_theoretical_bound():
    for seed in (1, 2, 3):
        inst = random_instance(6, seed=seed, k=0.3)
        eps = 0.05
        opts = SolverOptions(stop_mode="gradient_mapping", epsilon=eps, gamma_inc=1.0)
        res = minimize(inst, options=opts)
        assert res.status == "converged"
        # lower envelope of f*: exact minimum over all box corners, which
        # bounds the constrained optimum from below
        corner_best = min(
            dense_objective(inst, np.array(c))
            for c in itertools.product(*zip(inst.l, inst.u))
        )
        L = estimate_lipschitz(inst, 30)
        denom = eps * eps * min(opts.eta0, opts.gamma / L)
        bound = int(np.ceil(2.0 * (res.initial_objective - corner_best) / denom))
        assert len(res.trace) <= bound


def test_minimize_certificate_on_gradient_mapping_stop():
    inst = random_instance(40, seed=11, k=0.7, p=2)
    eps = 1e-5
    res = minimize(inst, options=SolverOptions(stop_mode="gradient_mapping", epsilon=eps))
    assert res.status == "converged"
    eta_final = float(res.trace.column("eta")[-1])
    assert gradient_mapping_norm(res.alpha, eta_final, inst) <= eps * (1 + 1e-6) + 1e-9


def test_minimize_deterministic_traces():
    inst = random_instance(20, seed=5, k=0.5)
    r1 = minimize(inst, options=SolverOptions())
    r2 = minimize(inst, options=SolverOptions())
    npt.assert_array_equal(r1.alpha, r2.alpha)
    assert len(r1.trace) == len(r2.trace)
    for a, b in zip(r1.trace.rows, r2.trace.rows):
        assert a[:6] == b[:6]  # everything but seconds


def test_minimize_rejects_infeasible_start():
    inst = two_node_instance(k=0.1)
    with pytest.raises(ValueError, match="infeasible"):
        minimize(inst, alpha0=np.array([0.9, 0.9]))


def test_minimize_max_iters_status():
    inst = random_instance(30, seed=9, k=1.0)
    opts = SolverOptions(stop_mode="gradient_mapping", epsilon=0.0, max_iters=3)
    res = minimize(inst, options=opts)
    assert res.status == "max_iters"
    assert len(res.trace) == 3


def test_minimize_time_limit_status():
    inst = random_instance(30, seed=10, k=1.0)
    opts = SolverOptions(rel_threshold=1e-16, time_limit=1e-9)
    res = minimize(inst, options=opts)
    assert res.status == "time_limit"
    assert len(res.trace) >= 1


def test_minimize_stepsize_underflow_guard(monkeypatch):
    inst = random_instance(10, seed=12, k=0.5)
    real = optimizer_module.equilibrium
    calls = {"n": 0}

    def stuck(instance, alpha, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            return real(instance, alpha, **kw)
        return types.SimpleNamespace(objective=float("inf"), z=None, report=None)

    monkeypatch.setattr(optimizer_module, "equilibrium", stuck)
    with pytest.raises(RuntimeError, match="stepsize underflow"):
        minimize(inst, options=SolverOptions())


def test_trace_csv_round_trip(tmp_path):
    inst = random_instance(15, seed=13, k=0.4)
    res = minimize(inst, options=SolverOptions())
    path = tmp_path / "trace.csv"
    res.trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,objective,eta,backtracks,grad_map_norm,slack,seconds"
    assert len(lines) == 1 + len(res.trace)
    first = lines[1].split(",")
    assert int(first[0]) == 1
    assert float(first[1]) == res.trace.objectives[0]


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(eta0=0.0)
    with pytest.raises(ValueError):
        SolverOptions(gamma=1.0)
    with pytest.raises(ValueError):
        SolverOptions(gamma_inc=0.9)
    with pytest.raises(ValueError):
        SolverOptions(stop_mode="exact")
    with pytest.raises(ValueError):
        SolverOptions(time_limit=0.0)
