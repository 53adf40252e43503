import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olgbubbles import (
    EconomyParams,
    HorizonExceeded,
    InvalidInput,
    SequenceSpec,
    Utility,
    bubble_component_path,
    discount_factor,
    discount_factors,
    exchange_log_dividend_path,
    fundamental_value,
    montrucchio_classify,
    simulate_olg,
)
from olgbubbles.bubbles import BUBBLELESS, BUBBLY, UNDETERMINED, discounted_tail

mp.mp.dps = 40


def log_tree(ey, d, beta=0.9):
    return EconomyParams(Utility.log(beta), None, endow_young=ey, dividends=d)


class TestDiscounting:
    def test_identity_and_product(self, example3_params):
        path = simulate_olg(example3_params, 0.0, 0.0, 10)
        assert discount_factor(path, 3, 0) == 1.0
        assert discount_factor(path, 2, 3) == pytest.approx(1 / (path.R[3] * path.R[4] * path.R[5]), rel=1e-15)
        Q = discount_factors(path, 2)
        assert len(Q) == 9
        assert Q[3] == pytest.approx(discount_factor(path, 2, 3), rel=1e-15)

    def test_horizon(self, example3_params):
        path = simulate_olg(example3_params, 0.0, 0.0, 10)
        with pytest.raises(HorizonExceeded):
            discount_factor(path, 8, 3)
        with pytest.raises(HorizonExceeded):
            discount_factors(path, 11)

    def test_discounted_tail_closed_form(self):
        d = SequenceSpec.geometric(1.0, 0.5)
        # sum_{s>0} 0.5^s / 2^s = 1/3
        assert discounted_tail(d, 2.0, 0) == pytest.approx(1 / 3, rel=1e-15)
        assert discounted_tail(SequenceSpec.constant(1.0), 1.0, 0) == math.inf
        assert discounted_tail(SequenceSpec.constant(0.0), 0.5, 0) == 0.0

    def test_discounted_tail_explicit_prefix(self):
        d = SequenceSpec.explicit([5.0, 1.0, 2.0], tail="geometric", tail_ratio=0.5)
        ref = mp.mpf(1) / 2 + mp.mpf(2) / 4 + mp.nsum(lambda s: 2 * mp.mpf(0.5) ** (s - 2) / 2**s, [3, mp.inf])
        assert discounted_tail(d, 2.0, 0) == pytest.approx(float(ref), rel=1e-14)


class TestFundamentalValue:
    def test_stationary_tree_has_no_bubble(self):
        params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.constant(0.1))
        path = exchange_log_dividend_path(params, 40)
        fv = fundamental_value(path, params.dividends, 0, 40)
        assert fv.exact_tail is not None
        assert fv.fv == pytest.approx(path.q[0], rel=1e-13)
        assert fv.truncated < fv.fv

    def test_truncation_only_with_bound(self):
        ey = SequenceSpec.explicit([1.0, 1.2, 0.9, 1.1])
        params = log_tree(ey, SequenceSpec.constant(0.1))
        path = exchange_log_dividend_path(params, 10)
        fv = fundamental_value(path, params.dividends, 0, 2, r_min=1.1)
        assert fv.truncation_only
        assert fv.tail_bound is not None and fv.tail_bound > 0.0

    def test_horizon(self):
        params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.constant(0.1))
        path = exchange_log_dividend_path(params, 5)
        with pytest.raises(HorizonExceeded):
            fundamental_value(path, params.dividends, 2, 4)


class TestMontrucchio:
    @pytest.mark.parametrize(
        "gd, ge, verdict",
        [(0.5, 1.0, BUBBLY), (1.0, 1.0, BUBBLELESS), (1.1, 1.05, BUBBLELESS), (1.0, 1.05, BUBBLY)],
    )
    def test_growth_ratio(self, gd, ge, verdict):
        res = montrucchio_classify(SequenceSpec.geometric(0.1, gd), SequenceSpec.geometric(0.5, ge))
        assert res.verdict == verdict
        assert res.ratio_estimate == gd / ge

    def test_numeric_path_undetermined(self):
        params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.geometric(0.1, 0.5))
        path = exchange_log_dividend_path(params, 60)
        res = montrucchio_classify(params.dividends, path)
        assert res.verdict == UNDETERMINED
        assert res.ratio_estimate == pytest.approx(0.5, rel=1e-10)

    def test_rejects_zero_dividends(self):
        with pytest.raises(InvalidInput):
            montrucchio_classify(SequenceSpec.constant(0.0), SequenceSpec.constant(1.0))

    def test_rejects_nonpositive_prices(self):
        with pytest.raises(InvalidInput):
            montrucchio_classify(SequenceSpec.constant(0.1), np.array([1.0, 0.0, 1.0]))


class TestBubbleComponent:
    def test_pure_bubble(self, kocherlakota_params):
        path = simulate_olg(kocherlakota_params, 0.0, 14.0, 5)
        rep = bubble_component_path(path)
        assert rep.pure_bubble
        assert np.array_equal(rep.fiat_component, path.p)
        assert rep.recursion_residual < 1e-12

    def test_shrinking_dividends_leave_bubble(self):
        params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.geometric(0.05, 0.5))
        path = exchange_log_dividend_path(params, 80)
        rep = bubble_component_path(path, price_spec=SequenceSpec.constant(0.9 / 1.9))
        assert rep.montrucchio == BUBBLY
        assert rep.sign_constant
        assert rep.recursion_residual < 1e-10
        assert rep.bubble_component[0] > 0.4

    def test_constant_dividends_no_bubble(self):
        params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.constant(0.1))
        path = exchange_log_dividend_path(params, 40)
        rep = bubble_component_path(path, price_spec=SequenceSpec.constant(0.9 / 1.9))
        assert rep.tail == "exact"
        assert rep.montrucchio == BUBBLELESS
        assert np.max(np.abs(rep.bubble_component)) < 1e-13


@given(
    beta=st.floats(0.5, 0.99),
    gd=st.floats(0.3, 0.99),
    d0=st.floats(0.01, 0.2),
    T=st.integers(5, 60),
)
@settings(max_examples=40, deadline=None)
def test_bubble_recursion_property(beta, gd, d0, T):
    params = log_tree(SequenceSpec.constant(1.0), SequenceSpec.geometric(d0, gd), beta)
    path = exchange_log_dividend_path(params, T)
    rep = bubble_component_path(path)
    assert rep.recursion_residual < 1e-10
    b = rep.bubble_component
    assert np.allclose(b[1:], path.R[1:] * b[:-1], rtol=1e-10, atol=1e-12)
