import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jsccra.assignment import KCardinalitySolver
from jsccra.capacity import (
    AllocatedPair,
    bisect_supported,
    brute_force_p1,
    evaluate_utility,
    linear_scan_supported,
    power_slack_factor,
    save_allocation,
    solve_capacity,
)
from jsccra.power import build_power_matrix
from jsccra.psnr_model import default_model
from jsccra.scenario import SystemConfig, User, generate_scenario

from oracles import scenario_with_costs

MODEL = default_model()
SMALL = SystemConfig(num_users=6, num_rbs=5, num_subchannels=15)


def test_budget_extremes():
    scenario = generate_scenario(SMALL.replace(rng_seed=4))
    assert solve_capacity(scenario.with_config(bs_power_w=0.0), MODEL).J_star == 0
    full = solve_capacity(scenario.with_config(bs_power_w=1e6), MODEL)
    assert full.J_star == KCardinalitySolver(build_power_matrix(scenario, MODEL).costs).max_size


def test_hand_built_costs():
    costs = np.array([[1e-3, 3e-3], [2e-3, 9e-3]])
    for budget, expected in [(0.5e-3, 0), (1e-3, 1), (4.9e-3, 1), (5e-3, 2)]:
        scenario = scenario_with_costs(costs, MODEL, budget_w=budget)
        assert solve_capacity(scenario, MODEL).J_star == expected, budget


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), budget=st.floats(1e-4, 1.0))
def test_result_is_feasible_and_fully_satisfied(seed, budget):
    scenario = generate_scenario(SMALL.replace(rng_seed=seed, bs_power_w=budget))
    result = solve_capacity(scenario, MODEL)
    assert result.total_power_w <= budget
    assert result.J_star == len(result.pairs) == int(result.utilities.sum())
    assert len({p.rb for p in result.pairs}) == len(result.pairs)
    for p in result.pairs:
        assert evaluate_utility(scenario.users[p.user], p, MODEL, scenario.config) == 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), budget=st.floats(1e-5, 1.0))
def test_bisection_matches_linear_scan(seed, budget):
    scenario = generate_scenario(SMALL.replace(rng_seed=seed))
    solver = KCardinalitySolver(build_power_matrix(scenario, MODEL).costs)
    J, _, solves = bisect_supported(solver, budget)
    assert J == linear_scan_supported(solver, budget)
    assert solves <= math.ceil(math.log2(SMALL.num_users)) + 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), b1=st.floats(1e-5, 1.0), b2=st.floats(1e-5, 1.0))
def test_supported_count_is_monotone_in_budget(seed, b1, b2):
    scenario = generate_scenario(SMALL.replace(rng_seed=seed))
    lo, hi = sorted((b1, b2))
    assert (solve_capacity(scenario.with_config(bs_power_w=lo), MODEL).J_star
            <= solve_capacity(scenario.with_config(bs_power_w=hi), MODEL).J_star)


@pytest.mark.parametrize("seed", range(6))
def test_backends_agree(seed):
    scenario = generate_scenario(SMALL.replace(rng_seed=seed, bs_power_w=0.02))
    flow = solve_capacity(scenario, MODEL, backend="flow")
    lp = solve_capacity(scenario, MODEL, backend="lp")
    assert flow.J_star == lp.J_star
    assert lp.total_power_w == pytest.approx(flow.total_power_w, rel=1e-6)


@pytest.mark.parametrize("seed", range(8))
def test_oracle_agrees_on_tiny_drops(seed):
    config = SystemConfig(num_users=3, num_rbs=3, num_subchannels=9, rng_seed=seed,
                          bs_power_w=3e-3, cr_set=(Fraction(1, 24), Fraction(5, 48), Fraction(1, 6)))
    scenario = generate_scenario(config)
    ours = solve_capacity(scenario, MODEL).J_star
    assert brute_force_p1(scenario, MODEL) <= ours
    looser = scenario.with_config(bs_power_w=3e-3 * power_slack_factor(0.25))
    assert ours <= brute_force_p1(looser, MODEL)


def test_oracle_refuses_large_instances():
    with pytest.raises(ValueError):
        brute_force_p1(generate_scenario(SystemConfig(num_users=6, num_rbs=6,
                                                      num_subchannels=6)), MODEL)


def test_utility_checks_both_bounds():
    config = SystemConfig(num_users=1, num_rbs=1, num_subchannels=3)
    user = User(0, 100.0, 5e-3, 22.0, np.full(3, 1e-10))
    snr = MODEL.min_snr_for_psnr(Fraction(7, 48), 22.0)
    power = 3 * config.noise_power_w / 1e-10 * 10 ** (snr / 10)
    assert evaluate_utility(user, AllocatedPair(0, 0, Fraction(7, 48), snr, power), MODEL, config) == 1
    # same power but a CR whose delay exceeds 5 ms
    assert evaluate_utility(user, AllocatedPair(0, 0, Fraction(1, 6), snr, power), MODEL, config) == 0
    # 1% less power misses the PSNR bound
    assert evaluate_utility(user, AllocatedPair(0, 0, Fraction(7, 48), snr, power * 0.99),
                            MODEL, config) == 0
    assert evaluate_utility(user, None, MODEL, config) == 0


def test_slack_factor():
    assert power_slack_factor(0.25) == pytest.approx(10 ** 0.025, rel=1e-15)


def test_allocation_document(tmp_path):
    scenario = generate_scenario(SMALL.replace(rng_seed=2, bs_power_w=0.01))
    result = solve_capacity(scenario, MODEL)
    save_allocation(result, tmp_path / "a.json")
    data = json.loads((tmp_path / "a.json").read_text())
    assert data["J_star"] == result.J_star and data["method"] == "optimal"
    assert math.fsum(p["power_w"] for p in data["pairs"]) == pytest.approx(data["total_power_w"])
    assert all(Fraction(p["cr"]) in SMALL.cr_set for p in data["pairs"])
    cr, snr, power = result.per_user(SMALL.num_users)
    assert np.isnan(power).sum() == SMALL.num_users - result.J_star
