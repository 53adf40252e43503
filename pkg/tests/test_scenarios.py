import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olgbubbles import (
    EconomyParams,
    NonEquilibriumPath,
    RegimeMismatch,
    SequenceSpec,
    Utility,
    cobb_douglas_bubble_path,
    condition17_ratio,
    critical_bubble,
    exchange_log_dividend_path,
    fiat_continuum_path,
    fiat_stationary_price,
    linear_tech_path,
    residual_report,
    simulate_olg,
)
from olgbubbles.scenarios import (
    BUBBLELESS_KSTAR,
    BUBBLY_ASYMPTOTIC,
    BUBBLY_VANISHING,
    NON_EQUILIBRIUM,
    fiat_recursion_residual,
    kocherlakota_sequences,
)

mp.mp.dps = 40

# Example 3 constants, derived independently
GAMMA = mp.mpf(21) / 19
B_BAR = float(mp.mpf("0.7") * mp.mpf("0.9") / mp.mpf("1.9") * (GAMMA - 1) / GAMMA)
LIMIT_K = float(mp.mpf("0.3") ** (1 / mp.mpf("0.7")))


def ex3(p0, T=200):
    return cobb_douglas_bubble_path(0.3, 1.0, 0.9, 1.0, p0, T)


class TestCobbDouglas:
    def test_critical_value(self):
        assert B_BAR == pytest.approx(0.031578947368421, rel=1e-13)
        assert critical_bubble(0.3, 1.0, 0.9, 1.0) == pytest.approx(B_BAR, rel=1e-15)

    def test_critical_path_closed_form(self):
        res = ex3(B_BAR)
        assert res.classification == BUBBLY_ASYMPTOTIC
        p, K = res.path.p, res.path.K
        assert np.allclose(p, (21 / 19 - 1) * K[1:], rtol=1e-14, atol=0)
        assert abs(K[200] - LIMIT_K) < 1e-12
        assert res.special_values["limit_K"] == pytest.approx(LIMIT_K, rel=1e-15)
        assert res.diagnostics["converged"]

    def test_snap_to_critical(self):
        res = ex3(B_BAR * (1 + 5e-13))
        assert res.classification == BUBBLY_ASYMPTOTIC
        assert res.diagnostics["snapped_to_critical"]
        assert ex3(B_BAR * (1 + 1e-9), T=500).classification == NON_EQUILIBRIUM

    @pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
    def test_vanishing(self, frac):
        res = ex3(frac * B_BAR, T=500)
        assert res.classification == BUBBLY_VANISHING
        assert abs(res.path.p[500]) < 1e-8
        assert abs(res.path.K[500] - res.special_values["K_star"]) < 1e-8

    def test_bubbleless(self):
        res = ex3(0.0, T=300)
        assert res.classification == BUBBLELESS_KSTAR
        assert np.all(res.path.p == 0.0)

    def test_overshoot_fails_with_period(self):
        res = ex3(1.2 * B_BAR)
        assert res.classification == NON_EQUILIBRIUM
        assert res.first_failure_t is not None and res.first_failure_t >= 1
        assert res.path is not None and res.path.T == res.first_failure_t - 1

    def test_agrees_with_shooting(self):
        res = ex3(0.5 * B_BAR, T=40)
        sim = simulate_olg(res.params, 0.0, 0.5 * B_BAR, 40)
        assert np.allclose(sim.K, res.path.K, rtol=1e-10, atol=0)
        assert np.allclose(sim.p, res.path.p, rtol=1e-9, atol=1e-15)
        assert residual_report(res.params, res.path).max_norm < 1e-12

    def test_condition17_critical(self):
        ratio = condition17_ratio(ex3(B_BAR).path)
        assert np.all(ratio <= 1.0)
        assert ratio[-1] == pytest.approx(0.81, rel=1e-8)

    def test_negative_price(self):
        with pytest.raises(ValueError):
            ex3(-0.01)


class TestFiat:
    def test_stationary_price(self):
        sp = fiat_stationary_price(70.0, 35.0, 8 / 7, 2.0, 7 / 8)
        assert sp.feasible and abs(sp.p - 14.0) < 1e-10

    def test_stationary_price_log(self):
        # beta e y/(d e) (d+p) = y-p with beta=0.5, y=2, d=1/2 (scaled)
        sp = fiat_stationary_price(4.0, 1.0, 1.0, 1.0, 0.5)
        assert sp.feasible
        assert 0.5 * (4 - sp.p) / (1 + sp.p) == pytest.approx(1.0, rel=1e-14)

    def test_stationary_infeasible(self):
        assert not fiat_stationary_price(70.0, 35.0, 8 / 7, 2.0, 0.1).feasible

    def test_stationary_ray(self, kocherlakota):
        y, o = kocherlakota
        path = fiat_continuum_path(y, o, 2.0, 7 / 8, 14.0, 100)
        ref = 14.0 * (8 / 7) ** np.arange(101)
        assert np.allclose(path.p, ref, rtol=1e-13, atol=0)
        assert np.max(fiat_recursion_residual(path, 2.0)) < 1e-10

    @pytest.mark.parametrize("p0", [3.5, 7.0, 10.5])
    def test_continuum_members(self, kocherlakota, p0):
        y, o = kocherlakota
        path = fiat_continuum_path(y, o, 2.0, 7 / 8, p0, 100)
        assert np.all(path.p > 0.0)
        assert np.max(fiat_recursion_residual(path, 2.0)) < 1e-10
        assert set(path.diagnostics) <= {"unique", "second_root_past_turn"}

    def test_no_trade(self, kocherlakota):
        path = fiat_continuum_path(*kocherlakota, 2.0, 7 / 8, 0.0, 10)
        assert np.all(path.p == 0.0)
        assert path.diagnostics == ["no_trade"] * 10

    def test_price_too_high(self, kocherlakota):
        with pytest.raises(NonEquilibriumPath):
            fiat_continuum_path(*kocherlakota, 2.0, 7 / 8, 20.0, 10)

    def test_non_decaying_utility(self):
        y = SequenceSpec.geometric(70.0, 1.5)
        o = SequenceSpec.geometric(35.0, 1.5)
        with pytest.raises(NonEquilibriumPath):
            fiat_continuum_path(y, o, 0.5, 0.9, 5.0, 10)

    def test_sequences(self):
        y, o = kocherlakota_sequences()
        assert (y(0), o(0)) == (70.0, 35.0)


class TestLinear:
    d = SequenceSpec.geometric(0.1, 0.5)

    def test_bubbleless(self):
        res = linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.1, 0.0, 60)
        assert res.classification == BUBBLELESS_KSTAR
        assert res.path.q[60] < 1e-8
        assert res.special_values["fv0"] == pytest.approx(0.1, rel=1e-15)

    def test_bubbly_iff_unit_return(self):
        res = linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.2, 0.0, 60)
        assert res.classification == BUBBLY_ASYMPTOTIC
        assert abs(res.path.q[60] - 0.1) < 1e-8
        low = linear_tech_path(0.02, 1.0, 0.1, 0.9, self.d, 0.2, 0.0, 60)
        assert low.classification == BUBBLY_VANISHING
        assert low.path.q[60] < 1e-2

    def test_supremum(self):
        res = linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.1, 0.0, 10)
        assert abs(res.special_values["sup_p0"] - (9 / 19 - 0.1)) <= 1e-12

    def test_admissibility(self):
        with pytest.raises(NonEquilibriumPath):
            linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.05, 0.0, 10)
        with pytest.raises(NonEquilibriumPath):
            linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.2, 0.3, 10)

    def test_regime(self):
        with pytest.raises(RegimeMismatch):
            linear_tech_path(0.2, 1.0, 0.1, 0.9, self.d, 0.2, 0.0, 10)

    def test_residuals(self):
        res = linear_tech_path(0.04, 1.0, 0.04, 0.9, self.d, 0.2, 0.1, 60)
        assert residual_report(res.params, res.path).max_norm < 1e-12


class TestExchangeLog:
    def test_closed_form(self):
        params = EconomyParams(Utility.log(0.9), None, SequenceSpec.constant(0.1),
                               SequenceSpec.geometric(1.0, 1.05))
        path = exchange_log_dividend_path(params, 30)
        assert np.allclose(path.q, 0.9 / 1.9 * 1.05 ** np.arange(31), rtol=1e-14)

    def test_regime(self, kocherlakota_params):
        with pytest.raises(RegimeMismatch):
            exchange_log_dividend_path(kocherlakota_params, 5)


@given(frac=st.floats(0.01, 0.99), alpha=st.floats(0.2, 0.5), A=st.floats(0.5, 2.0))
@settings(max_examples=30, deadline=None)
def test_trichotomy_below_critical(frac, alpha, A):
    beta = 0.9
    b_bar = critical_bubble(alpha, A, beta, 1.0)
    if not b_bar > 0.0:
        return
    res = cobb_douglas_bubble_path(alpha, A, beta, 1.0, frac * b_bar, 50)
    assert res.classification == BUBBLY_VANISHING
    assert np.all(res.path.p > 0.0)
    assert np.all(np.diff(res.diagnostics["z"]) > 0.0)
    over = cobb_douglas_bubble_path(alpha, A, beta, 1.0, (1 + frac) * b_bar, 2000)
    assert over.classification == NON_EQUILIBRIUM
    assert math.isfinite(over.special_values["gamma"])
