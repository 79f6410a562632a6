import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from horizon_irl.mdp import ValidationError
from horizon_irl.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, solve_lp


def lp(c, D, b, lo=0.0, hi=np.inf):
    return LpProblem(np.asarray(c, float), np.asarray(D, float), np.asarray(b, float), lo, hi)


def vertex_optimum(c, D, b):
    """Best basic feasible solution of min c x, D x <= b, x >= 0 by enumeration."""
    n = len(c)
    rows = np.vstack([D, -np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n)])
    best = None
    for active in itertools.combinations(range(len(rows)), n):
        A = rows[list(active)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, rhs[list(active)])
        if np.all(rows @ x <= rhs + 1e-9):
            val = c @ x
            if best is None or val < best[0] - 1e-12:
                best = (val, x)
    return best


def test_maximise_single_variable():
    sol = solve_lp(lp([-1.0], [[1.0]], [3.0]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)


def test_infeasible():
    # x >= 1 and x <= 0
    assert solve_lp(lp([-1.0], [[-1.0], [1.0]], [-1.0, 0.0])).status == INFEASIBLE


def test_unbounded():
    assert solve_lp(lp([-1.0, 0.0], [[0.0, 1.0]], [1.0])).status == UNBOUNDED


def test_free_and_boxed_variables():
    # min x0 - x1 with x0 free, -2 <= x1 <= 5, x0 >= -4 via a row
    p = LpProblem(np.array([1.0, -1.0]), np.array([[-1.0, 0.0]]), np.array([4.0]),
                  np.array([-np.inf, -2.0]), np.array([np.inf, 5.0]))
    sol = solve_lp(p)
    np.testing.assert_allclose(sol.x, [-4.0, 5.0], atol=1e-9)
    assert p.max_violation(sol.x) <= 1e-7


def test_matches_vertex_enumeration():
    g = np.random.default_rng(7)
    for _ in range(20):
        D = g.uniform(0.1, 1.0, (5, 3))
        b = g.uniform(1.0, 2.0, 5)
        c = g.uniform(-1.0, 1.0, 3)
        val, _ = vertex_optimum(c, D, b)
        sol = solve_lp(lp(c, D, b))
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(val, abs=1e-9)
        assert lp(c, D, b).max_violation(sol.x) <= 1e-7


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_highs(seed):
    g = np.random.default_rng(seed)
    n, m = g.integers(1, 6), g.integers(1, 8)
    D = g.normal(size=(m, n))
    b = g.normal(size=m)
    c = g.normal(size=n)
    lo, hi = -g.uniform(0, 3, n), g.uniform(0, 3, n)
    sol = solve_lp(LpProblem(c, D, b, lo, hi))
    ref = linprog(c, A_ub=D, b_ub=b, bounds=list(zip(lo, hi)), method="highs")
    if ref.status == 2:
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(ref.fun, abs=1e-7)


def test_degenerate_problem_terminates():
    # many redundant constraints through the same vertex
    D = np.vstack([np.ones((6, 2)), np.eye(2)])
    sol = solve_lp(lp([-1.0, -1.0], D, np.concatenate([np.ones(6), np.ones(2)])))
    assert sol.status == OPTIMAL and sol.objective_value == pytest.approx(-1.0)


def test_bad_bounds():
    with pytest.raises(ValidationError):
        LpProblem(np.ones(1), np.ones((1, 1)), np.ones(1), np.array([2.0]), np.array([1.0]))


def test_degenerate_irl_lp_matches_highs():
    from horizon_irl.demos import DemonstrationSet, estimate_policy
    from horizon_irl.envs import GridSpec, make_gridworld
    from horizon_irl.lp_irl import build_lp, estimate_expert_transitions, mapping_matrix

    mdp, expert, _ = make_gridworld(GridSpec(7, 7, 3, seed=2))
    s = np.arange(mdp.n_states)
    est = estimate_policy(DemonstrationSet(np.stack([s, expert], axis=1), mdp.n_states, mdp.n_actions))
    p = build_lp(mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.9), 1.0, 0.01)
    sol = solve_lp(p)
    bounds = [(lo, None if np.isinf(hi) else hi) for lo, hi in zip(p.lower, p.upper)]
    ref = linprog(p.objective, A_ub=p.constraint_matrix, b_ub=p.rhs, bounds=bounds, method="highs")
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(ref.fun, abs=1e-7)
    assert p.max_violation(sol.x) <= 1e-7
