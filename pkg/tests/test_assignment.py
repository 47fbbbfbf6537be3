import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from jsccra.assignment import (
    FlowAssignment,
    KCardinalitySolver,
    max_matching_size,
    round_lp_solution,
    solve_hungarian,
    solve_k_assignment_flow,
    solve_p5_interior_point,
)
from jsccra.errors import RoundingFailed

from oracles import brute_force_assignment, brute_force_max_matching

INF = math.inf


@st.composite
def cost_matrices(draw, max_k=5, max_m=5, forbid=True):
    K = draw(st.integers(1, max_k))
    M = draw(st.integers(1, max_m))
    values = draw(arrays(np.float64, (K, M), elements=st.floats(0.0, 100.0)))
    if forbid:
        mask = draw(arrays(np.bool_, (K, M), elements=st.booleans()))
        values = np.where(mask, INF, values)
    return values


def test_hand_example():
    costs = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    flow = FlowAssignment(costs)
    assert flow.solve(0).pairs == ()
    assert flow.solve(1).cost == 0.0
    assert flow.solve(2).cost == 2.0  # (1,1) + (2,2)
    assert flow.solve(3).cost == 5.0  # (0,1) + (1,0) + (2,2)
    assert flow.solve(3).pairs == ((0, 1), (1, 0), (2, 2))
    assert solve_hungarian(costs).cost == 5.0


def test_cheapest_pairs_may_conflict():
    # both users prefer RB 0; J=2 must move one of them
    costs = np.array([[1.0, 10.0], [2.0, 4.0]])
    assert solve_k_assignment_flow(costs, 1).pairs == ((0, 0),)
    assert solve_k_assignment_flow(costs, 2).cost == 5.0


def test_infeasible_and_out_of_range():
    costs = np.array([[1.0, INF], [2.0, INF]])
    assert solve_k_assignment_flow(costs, 1).cost == 1.0
    assert solve_k_assignment_flow(costs, 2) is None
    with pytest.raises(ValueError):
        solve_k_assignment_flow(costs, 3)
    with pytest.raises(ValueError):
        solve_k_assignment_flow(np.array([[-1.0]]), 1)


@settings(max_examples=300, deadline=None)
@given(costs=cost_matrices())
def test_flow_matches_brute_force(costs):
    flow = FlowAssignment(costs)
    for J in range(min(costs.shape) + 1):
        expected = brute_force_assignment(costs, J)
        got = flow.solve(J)
        if expected is None:
            assert got is None
        else:
            assert got.cost == pytest.approx(expected, rel=1e-12, abs=1e-12)
            assert got.J == J
            assert len({k for k, _ in got.pairs}) == len({m for _, m in got.pairs}) == J


@settings(max_examples=200, deadline=None)
@given(costs=cost_matrices(6, 6))
def test_marginal_cost_is_nondecreasing(costs):
    flow = FlowAssignment(costs)
    totals = [a.cost for J in range(min(costs.shape) + 1) if (a := flow.solve(J)) is not None]
    steps = np.diff(totals)
    assert np.all(steps >= -1e-9)
    assert np.all(np.diff(steps) >= -1e-9)


@settings(max_examples=200, deadline=None)
@given(costs=cost_matrices(6, 6))
def test_max_matching_size(costs):
    allowed = np.isfinite(costs)
    assert max_matching_size(allowed) == brute_force_max_matching(allowed)


@settings(max_examples=200, deadline=None)
@given(costs=cost_matrices(8, 8, forbid=False))
def test_hungarian_matches_scipy(costs):
    rows, cols = linear_sum_assignment(costs)
    result = solve_hungarian(costs)
    assert result.J == min(costs.shape)
    assert result.cost == pytest.approx(costs[rows, cols].sum(), rel=1e-12, abs=1e-12)
    assert result.forced == ()


def test_hungarian_reports_forced_pairs():
    costs = np.array([[1.0, INF], [2.0, INF]])
    result = solve_hungarian(costs)
    assert result.pairs == ((0, 0),)
    assert result.forced == ((1, 1),)


@settings(max_examples=100, deadline=None)
@given(costs=cost_matrices(6, 6))
def test_hungarian_uses_forbidden_pairs_only_when_needed(costs):
    result = solve_hungarian(costs)
    size = max_matching_size(np.isfinite(costs))
    assert result.J == size
    assert result.J + len(result.forced) == min(costs.shape)
    assert result.cost == pytest.approx(solve_k_assignment_flow(costs, size).cost, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(costs=cost_matrices(6, 6), data=st.data())
def test_lp_matches_flow(costs, data):
    J = data.draw(st.integers(1, min(costs.shape)))
    exact = solve_k_assignment_flow(costs, J)
    lp = solve_p5_interior_point(costs, J)
    if exact is None:
        assert lp is None
        return
    scale = max(1.0, float(np.max(costs[np.isfinite(costs)])))
    assert abs(lp.objective - exact.cost) <= 1e-6 * max(exact.cost, 1e-6 * scale)
    assert np.all(lp.alpha >= -1e-9) and np.all(lp.alpha <= 1 + 1e-9)
    assert lp.alpha.sum() == pytest.approx(J, abs=1e-6)
    rounded = round_lp_solution(lp.alpha, costs, J, lp.objective)
    assert rounded.J == J
    assert rounded.cost == pytest.approx(exact.cost, rel=1e-6, abs=1e-9 * scale)


def test_lp_trivial_cases():
    costs = np.array([[1.0, 2.0], [3.0, 4.0]])
    zero = solve_p5_interior_point(costs, 0)
    assert zero.objective == 0.0 and not zero.alpha.any()
    assert solve_p5_interior_point(np.array([[1.0, INF], [2.0, INF]]), 2) is None


def test_rounding_rejects_costlier_support():
    costs = np.array([[1.0, 2.0], [2.0, 1.0]])
    alpha = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(RoundingFailed):
        round_lp_solution(alpha, costs, 2, objective=2.0)
    assert round_lp_solution(alpha, costs, 2, objective=4.0).cost == 4.0


def test_rounding_from_fractional_point():
    # a tie: the half-half solution is optimal and rounds through the support flow
    costs = np.array([[1.0, 1.0], [1.0, 1.0]])
    alpha = np.full((2, 2), 0.5)
    assert round_lp_solution(alpha, costs, 2, objective=2.0).cost == 2.0


@pytest.mark.parametrize("backend", ["flow", "lp"])
def test_solver_caches_and_counts(backend):
    costs = np.array([[1.0, 5.0, INF], [2.0, 1.0, 7.0]])
    solver = KCardinalitySolver(costs, backend)
    assert solver.max_size == 2
    first = solver.solve(2)
    assert solver.solve(2) is first
    assert solver.calls == 2
    assert first.cost == pytest.approx(2.0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        KCardinalitySolver(np.ones((2, 2)), "simplex")
