import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esoval.exceptions import DomainError, ValidationError
from esoval.model import (
    AffineIntensity,
    ConstantIntensity,
    CostSurface,
    GrantSpec,
    JumpSizeDistribution,
    MarketParams,
    PiecewiseIntensity,
    TimeIntensity,
    bs_call,
    call_payoff,
    expected_jump_size,
)

from oracle_values import V_ITM, V_STAR, V_T5


class TestParams:
    def test_market_rejects_bad_values(self):
        for bad in (dict(K=0), dict(sigma=0), dict(T=0), dict(S0=-1), dict(r=-0.01)):
            kw = dict(S0=10, K=10, r=0.05, q=0.0, sigma=0.2, T=1) | bad
            with pytest.raises(ValidationError):
                MarketParams(**kw)

    def test_grant_rejects_bad_values(self):
        for kw in (dict(M=0), dict(M=2.5), dict(M=1, t_v=-1), dict(M=1, alpha=-0.1)):
            with pytest.raises(ValidationError):
                GrantSpec(**kw)

    def test_vesting_after_maturity(self, market):
        with pytest.raises(ValidationError):
            GrantSpec(M=1, t_v=11).check_against(market)

    def test_replace(self, market):
        assert market.replace(S0=12).S0 == 12
        assert GrantSpec(3).replace(beta=0.2).beta == 0.2


class TestPayoff:
    @pytest.mark.parametrize("s,expected", [(12, 2), (10, 0), (0, 0)])
    def test_values(self, s, expected):
        assert call_payoff(s, 10) == expected

    def test_vectorised(self):
        np.testing.assert_array_equal(call_payoff(np.array([8.0, 11.0]), 10), [0.0, 1.0])


class TestJumpSizes:
    def test_unit_mean(self):
        assert expected_jump_size(JumpSizeDistribution.unit(), 7) == 1

    def test_uniform_mean(self):
        assert expected_jump_size(JumpSizeDistribution.uniform(), 5) == 3

    def test_custom_mean(self):
        d = JumpSizeDistribution.custom([[1.0], [0.5, 0.5], [0.5, 0.25, 0.25]])
        assert expected_jump_size(d, 3) == pytest.approx(1.75, abs=1e-15)

    def test_invalid_m(self):
        d = JumpSizeDistribution.custom([[1.0], [0.5, 0.5]])
        for m in (0, 3, 1.5):
            with pytest.raises(DomainError):
                expected_jump_size(d, m)

    @pytest.mark.parametrize("eps", [2e-12, -5e-12, 1e-6])
    def test_row_sum_tolerance(self, eps):
        with pytest.raises(ValidationError):
            JumpSizeDistribution.custom([[1.0], [0.5, 0.5 + eps]])

    def test_row_sum_within_tolerance(self):
        JumpSizeDistribution.custom([[1.0], [0.5, 0.5 + 5e-13]])

    def test_shape_and_sign_checks(self):
        with pytest.raises(ValidationError):
            JumpSizeDistribution.custom([[1.0], [1.0]])
        with pytest.raises(ValidationError):
            JumpSizeDistribution.custom([[1.0], [1.5, -0.5]])

    @given(st.integers(1, 50))
    def test_uniform_mean_exact(self, m):
        assert expected_jump_size(JumpSizeDistribution.uniform(), m) == (m + 1) / 2

    def test_table_layout(self):
        t = JumpSizeDistribution.uniform().table(3)
        assert t.shape == (4, 3)
        np.testing.assert_allclose(t[3], [1 / 3] * 3)
        assert t[1].tolist() == [1.0, 0.0, 0.0]


class TestIntensities:
    def test_constant_negative(self):
        with pytest.raises(DomainError):
            ConstantIntensity(-1)

    def test_piecewise_lookup(self):
        lam = PiecewiseIntensity((1.0, 2.0), (0.5, 1.0, 2.0))
        assert lam(0.5) == 0.5 and lam(1.0) == 1.0 and lam(3.0) == 2.0
        assert lam.bound(0.0, 1.5) == 1.0

    def test_affine_positivity_checked(self):
        with pytest.raises(DomainError):
            AffineIntensity(0.2, 0.05)  # negative beyond x = 4
        lam = AffineIntensity(0.2, 0.02)
        assert lam(0.0, math.log(2.0)) == pytest.approx(0.2 - 0.02 * math.log(2.0))
        assert lam(0.0, 50.0) == pytest.approx(0.0)  # clipped to the domain
        assert lam.bound(0, 10) == pytest.approx(0.4)

    def test_time_intensity(self):
        lam = TimeIntensity(lambda t: 1 + 0.1 * t)
        assert lam.bound(0, 10) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            TimeIntensity(lambda t: -1.0)(0.0)


class TestBlackScholes:
    def test_zero_maturity(self):
        assert bs_call(10, 10, 0.05, 0.015, 0.2, 0) == 0
        assert bs_call(12, 10, 0.05, 0.015, 0.2, 0) == 2

    def test_worthless_stock(self):
        assert bs_call(0, 10, 0.05, 0.015, 0.2, 10) == 0

    def test_negative_tau(self):
        with pytest.raises(DomainError):
            bs_call(10, 10, 0.05, 0.015, 0.2, -1)

    @pytest.mark.parametrize("S,tau,ref", [(10, 10, V_STAR), (10, 5, V_T5), (14, 3, V_ITM)])
    def test_against_quadrature(self, S, tau, ref):
        assert bs_call(S, 10, 0.05, 0.015, 0.2, tau) == pytest.approx(ref, rel=1e-13)

    @given(
        st.floats(0.1, 50), st.floats(0.01, 1.0), st.floats(0.01, 20),
        st.floats(0, 0.1), st.floats(0, 0.1),
    )
    def test_bounds(self, S, sigma, tau, r, q):
        v = bs_call(S, 10, r, q, sigma, tau)
        lo = max(S * math.exp(-q * tau) - 10 * math.exp(-r * tau), 0.0)
        assert lo - 1e-10 <= v <= S * math.exp(-q * tau) + 1e-10

    @given(st.floats(0.05, 0.8), st.floats(0.1, 15))
    def test_monotone_convex_in_S(self, sigma, tau):
        S = np.linspace(1, 30, 300)
        v = bs_call(S, 10, 0.05, 0.015, sigma, tau)
        assert np.all(np.diff(v) >= -1e-12)
        assert np.all(np.diff(v, 2) >= -1e-10)

    @given(st.floats(1, 30), st.floats(0.1, 15))
    def test_monotone_in_sigma(self, S, tau):
        v = [bs_call(S, 10, 0.05, 0.015, s, tau) for s in np.linspace(0.05, 1.0, 40)]
        assert np.all(np.diff(v) >= -1e-12)


class TestCostSurface:
    def test_interpolation(self):
        s = np.linspace(0, 20, 201)
        vals = np.stack([np.stack([s**2, 2 * s**2])])
        surf = CostSurface(times=np.array([0.0, 1.0]), s=s, values=vals)
        assert surf.at(10.0) == 100.0
        assert surf.at(10.05) == pytest.approx(10.05**2, rel=1e-12)
        assert surf.at(3.0, t=1.0) == pytest.approx(18.0)
        with pytest.raises(DomainError):
            surf.at(3.0, t=0.5)

    def test_shape_check(self):
        with pytest.raises(ValidationError):
            CostSurface(times=np.zeros(2), s=np.zeros(3), values=np.zeros((1, 2, 4)))

    def test_rows(self):
        s = np.array([1.0, 2.0, 3.0])
        surf = CostSurface(times=np.array([0.0]), s=s, values=np.ones((2, 1, 3)))
        assert len(list(surf.rows(1.5, 3.0))) == 4
