import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olgbubbles import (
    EconomyParams,
    NonPositiveCapital,
    NonPositiveConsumption,
    RegimeMismatch,
    SequenceSpec,
    Technology,
    Utility,
    sequence_eval,
    steady_state_and_gamma,
    technology_eval,
    utility_marginal,
)

mp.mp.dps = 40

# independently computed with mpmath at 40 digits
K_STAR_EX3 = 0.2065970957670821
MARGINAL_56 = float(mp.mpf(56) ** -2)


class TestUtility:
    def test_log_marginal(self):
        assert utility_marginal(Utility.log(0.9), 2.0) == 0.5

    def test_isoelastic_marginal_at_one(self):
        assert utility_marginal(Utility.crra(2.0, 0.9), 1.0) == 1.0

    def test_isoelastic_marginal_kocherlakota_level(self):
        assert utility_marginal(Utility.crra(2.0, 7 / 8), 56.0) == pytest.approx(MARGINAL_56, rel=1e-15)
        assert MARGINAL_56 == pytest.approx(3.1888e-4, rel=1e-4)

    @pytest.mark.parametrize("c", [0.0, -1.0, math.nan])
    def test_nonpositive_consumption(self, c):
        with pytest.raises(NonPositiveConsumption):
            utility_marginal(Utility.log(0.9), c)

    def test_sigma_one_rejected(self):
        with pytest.raises(ValueError):
            Utility.crra(1.0, 0.9)

    @pytest.mark.parametrize("beta", [0.0, 1.0, 1.5])
    def test_beta_range(self, beta):
        with pytest.raises(ValueError):
            Utility.log(beta)

    @given(sigma=st.floats(0.05, 8.0).filter(lambda s: abs(s - 1.0) > 1e-9))
    @settings(max_examples=40, deadline=None)
    def test_marginal_strictly_decreasing(self, sigma):
        grid = np.geomspace(1e-4, 1e4, 200)
        for u in (Utility.log(0.9), Utility.crra(sigma, 0.9)):
            m = [utility_marginal(u, c) for c in grid]
            assert all(a > b for a, b in zip(m, m[1:]))

    def test_marginal_explodes_near_zero(self):
        assert utility_marginal(Utility.log(0.5), 1e-300) > 1e299
        assert utility_marginal(Utility.crra(0.5, 0.5), 1e-300) > 1e149


class TestTechnology:
    def test_cobb_douglas_at_one(self):
        v = technology_eval(Technology.cobb_douglas(1.0, 0.3), 1.0)
        assert (v.f, v.f_prime) == (1.0, 0.3)
        assert v.wage == pytest.approx(0.7, rel=1e-15)
        assert v.gross_return == pytest.approx(0.3, rel=1e-15)

    def test_linear(self):
        v = technology_eval(Technology.linear(0.04, 1.0, 0.04), 5.0)
        assert v.f == pytest.approx(1.2, rel=1e-15)
        assert (v.f_prime, v.wage, v.gross_return) == (0.04, 1.0, 1.0)

    def test_cobb_douglas_high_precision(self):
        v = technology_eval(Technology.cobb_douglas(1.0, 0.3), 0.2)
        k = mp.mpf("0.2")
        assert v.f == pytest.approx(float(k ** mp.mpf("0.3")), rel=1e-15)
        assert v.wage == pytest.approx(float(mp.mpf("0.7") * k ** mp.mpf("0.3")), rel=1e-15)
        assert v.gross_return == pytest.approx(float(mp.mpf("0.3") * k ** mp.mpf("-0.7")), rel=1e-15)

    @pytest.mark.parametrize("k", [0.0, -0.5])
    def test_nonpositive_capital(self, k):
        with pytest.raises(NonPositiveCapital):
            technology_eval(Technology.cobb_douglas(1.0, 0.3), k)

    @given(
        k=st.floats(1e-3, 1e3),
        alpha=st.floats(0.05, 0.95),
        A=st.floats(0.1, 10.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_wage_identity(self, k, alpha, A):
        tech = Technology.cobb_douglas(A, alpha)
        direct = tech.f(k) - k * tech.f_prime(k)
        assert tech.wage(k) == pytest.approx((1 - alpha) * A * k**alpha, rel=1e-14)
        assert direct == pytest.approx(tech.wage(k), rel=1e-13)

    def test_linear_return_constant(self):
        tech = Technology.linear(0.3, 2.0, 0.5)
        assert {tech.gross_return(k) for k in (0.1, 1.0, 50.0)} == {0.8}
        assert {tech.wage(k) for k in (0.1, 1.0, 50.0)} == {2.0}


class TestSequences:
    def test_geometric_start(self):
        assert sequence_eval(SequenceSpec.geometric(35.0, 8 / 7), 0) == 35.0

    def test_geometric_two(self):
        assert sequence_eval(SequenceSpec.geometric(70.0, 8 / 7), 2) == pytest.approx(
            float(70 * (mp.mpf(8) / 7) ** 2), rel=1e-15
        )

    def test_constant_far(self):
        assert sequence_eval(SequenceSpec.constant(0.0), 10**6) == 0.0

    def test_explicit_tails(self):
        const = SequenceSpec.explicit([1.0, 2.0, 4.0])
        geo = SequenceSpec.explicit([1.0, 2.0, 4.0], tail="geometric")
        fixed = SequenceSpec.explicit([1.0, 2.0], tail="geometric", tail_ratio=0.5)
        assert [const(t) for t in range(5)] == [1, 2, 4, 4, 4]
        assert [geo(t) for t in range(5)] == [1, 2, 4, 8, 16]
        assert [fixed(t) for t in range(4)] == [1, 2, 1, 0.5]

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            SequenceSpec.explicit([1.0, -1.0])
        with pytest.raises(ValueError):
            SequenceSpec.constant(-0.1)

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError):
            sequence_eval(SequenceSpec.constant(1.0), -1)

    @given(c=st.floats(0, 1e3), g=st.floats(0.01, 3.0), t=st.integers(0, 200))
    @settings(max_examples=60, deadline=None)
    def test_total_and_nonnegative(self, c, g, t):
        for s in (SequenceSpec.constant(c), SequenceSpec.geometric(c, g)):
            v = sequence_eval(s, t)
            assert v >= 0.0 and math.isfinite(v)


class TestEconomyParams:
    def test_rejects_empty_start(self):
        with pytest.raises(ValueError):
            EconomyParams(Utility.log(0.9), Technology.cobb_douglas(1.0, 0.3), K0=0.0)

    def test_supplies_fixed(self):
        with pytest.raises(ValueError):
            EconomyParams(Utility.log(0.9), K0=1.0, a_init=2.0)

    def test_exchange_with_endowment(self):
        p = EconomyParams(Utility.log(0.9), endow_young=SequenceSpec.constant(1.0))
        assert p.is_exchange


class TestSteadyState:
    def test_example3_gamma(self, example3_params):
        ss = steady_state_and_gamma(example3_params)
        assert ss.gamma == pytest.approx(21 / 19, rel=1e-15)
        assert ss.low_interest

    def test_example3_k_star(self, example3_params):
        ss = steady_state_and_gamma(example3_params)
        ref = (mp.mpf("0.3") * mp.mpf(21) / 19) ** (1 / mp.mpf("0.7"))
        assert float(ref) == pytest.approx(K_STAR_EX3, rel=1e-15)
        assert ss.K_star == pytest.approx(K_STAR_EX3, rel=1e-14)

    def test_no_bubble_regime(self):
        params = EconomyParams(Utility.log(0.5), Technology.cobb_douglas(1.0, 0.5), K0=1.0)
        ss = steady_state_and_gamma(params)
        assert ss.gamma == pytest.approx(1 / 3, rel=1e-15)
        assert not ss.low_interest

    @pytest.mark.parametrize(
        "params",
        [
            EconomyParams(Utility.crra(2.0, 0.9), Technology.cobb_douglas(1.0, 0.3), K0=1.0),
            EconomyParams(Utility.log(0.9), Technology.cobb_douglas(1.0, 0.3, delta=0.5), K0=1.0),
            EconomyParams(Utility.log(0.9), Technology.linear(0.1, 1.0, 1.0), K0=1.0),
            EconomyParams(Utility.log(0.9), endow_young=SequenceSpec.constant(1.0)),
            EconomyParams(Utility.log(0.9), Technology.cobb_douglas(1.0, 0.3), K0=1.0,
                          endow_old=SequenceSpec.constant(0.1)),
        ],
    )
    def test_regime_mismatch(self, params):
        with pytest.raises(RegimeMismatch):
            steady_state_and_gamma(params)

    @given(alpha=st.floats(0.05, 0.95), beta=st.floats(0.01, 0.99), A=st.floats(0.1, 10.0))
    @settings(max_examples=100, deadline=None)
    def test_fixed_point_and_flag(self, alpha, beta, A):
        tech = Technology.cobb_douglas(A, alpha)
        ss = steady_state_and_gamma(EconomyParams(Utility.log(beta), tech, K0=1.0))
        K = ss.K_star
        assert abs(K - ss.gamma * alpha * A * K**alpha) < 1e-12 * max(1.0, K)
        fp = tech.f_prime(K)
        if abs(fp - 1.0) > 1e-12:
            assert ss.low_interest == (fp < 1.0)
