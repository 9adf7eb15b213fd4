import numpy as np
import numpy.testing as npt
import pytest
import scipy.sparse as sp

from opinion_opt.instance import Instance, RowStochasticMatrix, change_norm, is_feasible
from opinion_opt.projection import (
    lambda_upper_bound,
    project,
    project_box,
    prox_g1,
)


def make_instance(n, alpha_init, l=None, u=None, k=1.0, p=1):
    # ring matrix; P is irrelevant to projection but Instance requires one
    rows = np.arange(n)
    P = RowStochasticMatrix(sp.csr_matrix(
        (np.ones(n), (rows, (rows + 1) % n)), shape=(n, n)))
    l = np.full(n, 1e-3) if l is None else np.asarray(l, dtype=float)
    u = np.full(n, 1.0) if u is None else np.asarray(u, dtype=float)
    return Instance(s=np.full(n, 0.5), P=P, l=l, u=u,
                    alpha_init=np.asarray(alpha_init, dtype=float), k=k, p=p)


# Oracle: 1-D prox by brute-force grid minimization of lam*g(beta) + (beta-a)^2/2.
def prox_1d_oracle(a, lam, center, p):
    beta = np.linspace(-2.0, 3.0, 500_001)
    g = np.abs(beta - center) if p == 1 else (beta - center) ** 2
    return float(beta[np.argmin(lam * g + 0.5 * (beta - a) ** 2)])


def grid_feasible_points(inst, per_axis):
    axes = [np.linspace(inst.l[i], inst.u[i], per_axis) for i in range(inst.n)]
    mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    d = mesh - inst.alpha_init
    norms = np.abs(d).sum(axis=1) if inst.p == 1 else np.sqrt((d ** 2).sum(axis=1))
    return mesh[norms <= inst.k]


def test_project_box_basics():
    l = np.array([0.1, 0.1])
    u = np.array([0.9, 0.9])
    inside = np.array([0.3, 0.6])
    npt.assert_array_equal(project_box(inside, l, u), inside)
    npt.assert_array_equal(project_box(np.array([-1.0, 2.0]), l, u), [0.1, 0.9])
    once = project_box(np.array([-5.0, 0.4]), l, u)
    npt.assert_array_equal(project_box(once, l, u), once)
    with pytest.raises(ValueError):
        project_box(inside, u, l)


def test_prox_identity_at_lambda_zero():
    alpha = np.array([0.9, 0.2])
    for p in (1, 2):
        inst = make_instance(2, [0.5, 0.5], p=p)
        npt.assert_array_equal(prox_g1(alpha, 0.0, inst), alpha)
    with pytest.raises(ValueError, match="nonnegative"):
        prox_g1(alpha, -0.1, make_instance(2, [0.5, 0.5]))


def test_prox_p1_hand_values_and_oracle():
    inst = make_instance(1, [0.5], p=1)
    for lam, expected in ((0.3, 0.6), (0.7, 0.5)):
        got = float(prox_g1(np.array([0.9]), lam, inst)[0])
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(prox_1d_oracle(0.9, lam, 0.5, p=1), abs=1e-5)
    # below the center it shrinks upward
    assert float(prox_g1(np.array([0.1]), 0.3, inst)[0]) == pytest.approx(0.4, abs=1e-12)


def test_prox_p2_hand_value_and_oracle():
    inst = make_instance(1, [0.5], p=2)
    got = float(prox_g1(np.array([0.9]), 0.5, inst)[0])
    assert got == pytest.approx(0.7, abs=1e-12)
    assert got == pytest.approx(prox_1d_oracle(0.9, 0.5, 0.5, p=2), abs=1e-5)


def test_lambda_upper_bound_p1():
    inst = make_instance(2, [0.5, 0.5], p=1)
    assert lambda_upper_bound(inst.alpha_init.copy(), inst) == 0.0
    assert lambda_upper_bound(np.array([0.8, -0.2]), inst) == pytest.approx(0.7)
    # boxed prox at the bound is alpha_init itself
    at_bound = prox_g1(np.array([0.8, -0.2]), 0.7, inst)
    npt.assert_allclose(at_bound, inst.alpha_init, atol=1e-15)


def test_lambda_upper_bound_p2_ball_membership():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        init = rng.uniform(0.2, 0.8, n)
        inst = make_instance(n, init, k=float(rng.uniform(0.01, 0.5)), p=2)
        alpha = rng.uniform(-1.0, 2.0, n)
        lam = lambda_upper_bound(alpha, inst)
        shrunk = prox_g1(alpha, lam, inst)
        assert change_norm(inst, shrunk) <= inst.k + 1e-9
    with pytest.raises(ValueError, match="k > 0"):
        lambda_upper_bound(np.array([0.9]), make_instance(1, [0.5], k=0.0, p=2))


def test_project_identity_inside_C():
    inst = make_instance(2, [0.5, 0.5], k=0.3, p=1)
    alpha = np.array([0.6, 0.45])
    npt.assert_array_equal(project(alpha, inst), alpha)


def test_project_zero_budget_returns_init():
    for p in (1, 2):
        inst = make_instance(3, [0.4, 0.5, 0.6], k=0.0, p=p)
        out = project(np.array([0.9, 0.1, 0.7]), inst)
        npt.assert_array_equal(out, inst.alpha_init)


def test_project_hand_example_two_coordinates():
    inst = make_instance(2, [0.5, 0.5], l=[1e-9, 1e-9], u=[1.0, 1.0], k=0.2, p=1)
    out = project(np.array([0.9, 0.5]), inst)
    npt.assert_allclose(out, [0.7, 0.5], atol=1e-8)
    # grid oracle: no feasible grid point is closer to the query
    pts = grid_feasible_points(inst, 1001)
    best = float(np.min(np.linalg.norm(pts - np.array([0.9, 0.5]), axis=1)))
    assert np.linalg.norm(out - np.array([0.9, 0.5])) <= best + 1e-4


@pytest.mark.parametrize("p", [1, 2])
def test_project_beats_feasible_grid(p):
    # optimality oracle on small n; 3-D uses a coarser grid to stay tractable
    rng = np.random.default_rng(p)
    for n, per_axis in ((1, 1001), (2, 1001), (3, 101)):
        for _ in range(3):
            init = rng.uniform(0.3, 0.7, n)
            inst = make_instance(n, init, k=float(rng.uniform(0.05, 0.4)), p=p)
            alpha = rng.uniform(-0.5, 1.5, n)
            out = project(alpha, inst)
            assert is_feasible(inst, out)
            pts = grid_feasible_points(inst, per_axis)
            best = float(np.min(np.linalg.norm(pts - alpha, axis=1)))
            assert float(np.linalg.norm(out - alpha)) <= best + 1e-4


@pytest.mark.parametrize("p", [1, 2])
def test_project_output_always_feasible(p):
    rng = np.random.default_rng(10 + p)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        init = rng.uniform(0.2, 0.8, n)
        inst = make_instance(n, init, k=float(rng.uniform(0.0, 0.6)), p=p)
        out = project(rng.uniform(-2.0, 3.0, n), inst)
        assert np.all(out >= inst.l) and np.all(out <= inst.u)
        assert change_norm(inst, out) <= inst.k + 1e-9


@pytest.mark.parametrize("p", [1, 2])
def test_project_idempotent(p):
    rng = np.random.default_rng(20 + p)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        inst = make_instance(n, rng.uniform(0.3, 0.7, n),
                             k=float(rng.uniform(0.01, 0.5)), p=p)
        once = project(rng.uniform(-1.0, 2.0, n), inst)
        twice = project(once, inst)
        assert float(np.max(np.abs(twice - once))) <= 1e-9


@pytest.mark.parametrize("p", [1, 2])
def test_bisection_feasibility_monotone_in_lambda(p):
    rng = np.random.default_rng(30 + p)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        inst = make_instance(n, rng.uniform(0.3, 0.7, n),
                             k=float(rng.uniform(0.01, 0.3)), p=p)
        alpha = rng.uniform(-1.0, 2.0, n)
        lams = np.sort(rng.uniform(0.0, 2.0, 10))
        feas = [change_norm(inst, project_box(prox_g1(alpha, lam, inst), inst.l, inst.u))
                <= inst.k + 1e-12 for lam in lams]
        # once feasible, stays feasible
        assert all(b or not a for a, b in zip(feas, feas[1:]))


@pytest.mark.parametrize("p", [1, 2])
def test_project_non_expansive(p):
    rng = np.random.default_rng(40 + p)
    for _ in range(30):
        n = int(rng.integers(1, 7))
        inst = make_instance(n, rng.uniform(0.3, 0.7, n),
                             k=float(rng.uniform(0.01, 0.5)), p=p)
        x = rng.uniform(-1.0, 2.0, n)
        y = rng.uniform(-1.0, 2.0, n)
        lhs = np.linalg.norm(project(x, inst) - project(y, inst))
        assert lhs <= np.linalg.norm(x - y) + 1e-9


def test_project_rejects_bad_depth():
    inst = make_instance(2, [0.5, 0.5], k=0.1)
    with pytest.raises(ValueError, match="depth"):
        project(np.array([0.9, 0.9]), inst, T=0)
