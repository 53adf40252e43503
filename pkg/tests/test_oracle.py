import math

import numpy as np
import pytest

from olgbubbles import (
    EconomyParams,
    InfeasibleTerminal,
    InvalidInput,
    Technology,
    Utility,
    best_response_search,
    candidate_plan,
    cobb_douglas_bubble_path,
    critical_bubble,
    fiat_continuum_path,
    map_olg_to_two_cycle,
    optimality_gap,
    prices_from_path,
    simulate_olg,
    truncated_problem,
)
from olgbubbles.oracle import MAX_T_SMALL, deviation_scan, euler_residuals, plan_from_savings


def problem_for(path, agent, T_small=8):
    alloc = map_olg_to_two_cycle(path.params, path)
    return truncated_problem(alloc, prices_from_path(path), agent, T_small)


@pytest.fixture(scope="module")
def critical_path():
    b = critical_bubble(0.3, 1.0, 0.9, 1.0)
    return cobb_douglas_bubble_path(0.3, 1.0, 0.9, 1.0, b, 40).path


class TestProblem:
    def test_candidate_consumption_reproduced(self, critical_path):
        for agent in (0, 1):
            prob = problem_for(critical_path, agent)
            cand = candidate_plan(prob)
            assert np.allclose(prob.consumption(cand.S), cand.c, rtol=1e-13, atol=1e-15)

    def test_candidate_split(self, critical_path):
        prob = problem_for(critical_path, 0)
        cand = candidate_plan(prob)
        again = plan_from_savings(prob, cand.S)
        assert np.allclose(again.k, cand.k, rtol=1e-13, atol=0)
        assert again.utility == pytest.approx(cand.utility, abs=1e-12)

    def test_horizon_limits(self, critical_path):
        alloc = map_olg_to_two_cycle(critical_path.params, critical_path)
        prices = prices_from_path(critical_path)
        with pytest.raises(InvalidInput):
            truncated_problem(alloc, prices, 0, MAX_T_SMALL + 1)
        with pytest.raises(InvalidInput):
            truncated_problem(alloc, prices, 0, 0)

    def test_grid_density(self, critical_path):
        with pytest.raises(InvalidInput):
            best_response_search(problem_for(critical_path, 0), grid_density=5)

    def test_infeasible_terminal(self, critical_path):
        prob = problem_for(critical_path, 0, 4)
        prob.S_terminal = 1e6
        with pytest.raises(InfeasibleTerminal):
            best_response_search(prob)


class TestOracle:
    @pytest.mark.parametrize("agent", [0, 1])
    def test_equilibrium_candidate_optimal(self, critical_path, agent):
        prob = problem_for(critical_path, agent)
        oracle = best_response_search(prob)
        assert oracle.converged
        assert optimality_gap(candidate_plan(prob), oracle) < 1e-6
        res = euler_residuals(prob, oracle)
        assert np.nanmax(res) < 1e-6

    def test_fiat_candidate_optimal(self, kocherlakota):
        path = fiat_continuum_path(*kocherlakota, 2.0, 7 / 8, 14.0, 20)
        for agent in (0, 1):
            prob = problem_for(path, agent)
            assert optimality_gap(candidate_plan(prob), best_response_search(prob)) < 1e-6

    def test_detects_foc_violation(self):
        # a high-interest economy whose old agents would rather keep saving
        params = EconomyParams(Utility.log(0.5), Technology.cobb_douglas(1.0, 0.5), K0=1.0)
        path = simulate_olg(params, 0.0, 0.0, 40)
        prob = problem_for(path, 1)
        cand = candidate_plan(prob)
        assert optimality_gap(cand, best_response_search(prob)) > 1e-2
        assert deviation_scan(prob, cand).best_improvement > 0.0

    def test_no_profitable_deviation(self, critical_path):
        prob = problem_for(critical_path, 0)
        assert deviation_scan(prob, candidate_plan(prob)).best_improvement == 0.0

    def test_gap_floor(self, critical_path):
        prob = problem_for(critical_path, 0)
        cand = candidate_plan(prob)
        assert optimality_gap(cand, cand) == 0.0

    def test_deterministic(self, critical_path):
        prob = problem_for(critical_path, 1)
        a, b = best_response_search(prob), best_response_search(prob)
        assert np.array_equal(a.S, b.S) and a.sweeps == b.sweeps

    def test_euler_nan_at_bound(self, critical_path):
        prob = problem_for(critical_path, 0)
        plan = candidate_plan(prob)
        plan.S = plan.S.copy()
        plan.S[1] = 0.0
        assert math.isnan(euler_residuals(prob, plan)[1])
