import numpy as np
import pytest

from esoval import fdm
from esoval.exceptions import ConfigurationError
from esoval.model import (
    AffineIntensity,
    ExercisePolicy,
    GrantSpec,
    MarketParams,
    TimeIntensity,
)

from oracle_values import SINGLE, V_STAR


class TestGrid:
    def test_nodes(self):
        g = fdm.FdGrid()
        assert g.n_space == 300 and g.s[-1] == pytest.approx(30.0)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            fdm.FdGrid(S_star=30, dS=0.7)
        with pytest.raises(ConfigurationError):
            fdm.FdGrid(boundary="periodic")


class TestBoundaryCoefficients:
    def test_terminal_values(self, market, uniform):
        bc = fdm.boundary_coefficients(market, GrantSpec(4, 0, 0, 0.2), ExercisePolicy.constant(1, uniform), [10.0])
        np.testing.assert_array_equal(bc.A[:, 0], [1, 2, 3, 4])
        np.testing.assert_array_equal(bc.B[:, 0], [1, 2, 3, 4])

    @pytest.mark.parametrize("lam,beta", [(1.0, 0.0), (0.3, 0.5), (0.0, 0.0)])
    def test_scalar_closed_form(self, market, lam, beta):
        times = np.linspace(0, 10, 11)
        bc = fdm.boundary_coefficients(market, GrantSpec(1, 0, 0, beta), ExercisePolicy.constant(lam), times)
        tau = market.T - times
        h = lam + beta
        for rate, got in ((market.q, bc.A[0]), (market.r, bc.B[0])):
            ref = h / (rate + h) + (1 - h / (rate + h)) * np.exp(-(rate + h) * tau)
            np.testing.assert_allclose(got, ref, atol=1e-8, rtol=0)

    def test_no_exercise_is_discount(self, market):
        times = np.array([0.0, 4.0])
        bc = fdm.boundary_coefficients(market, GrantSpec(1), ExercisePolicy.constant(0), times)
        np.testing.assert_allclose(bc.B[0], np.exp(-market.r * (market.T - times)), atol=1e-10)

    def test_positive(self, market, uniform):
        bc = fdm.boundary_coefficients(market, GrantSpec(5, 0, 0, 0.1), ExercisePolicy.constant(2, uniform), np.linspace(0, 10, 21))
        assert np.all(bc.A > 0) and np.all(bc.B > 0)


class TestVested:
    def test_terminal_slice(self, market, uniform):
        g = GrantSpec(3, 0, 0, 0.1)
        surf = fdm.solve_vested_cn(market, g, ExercisePolicy.constant(1, uniform), times=[10.0])
        for m in (1, 2, 3):
            np.testing.assert_array_equal(surf.slice(10.0, m), m * np.maximum(surf.s - 10, 0))

    def test_table_cell(self, market, uniform):
        v = fdm.price(market, GrantSpec(5, 0, 0.1, 0), ExercisePolicy.constant(1, uniform))
        assert v == pytest.approx(5.4729, abs=1e-3)

    @pytest.mark.parametrize("lam,beta", list(SINGLE))
    def test_single_option_oracle(self, market, lam, beta):
        v = fdm.price(market, GrantSpec(1, 0, 0, beta), ExercisePolicy.constant(lam))
        assert v == pytest.approx(SINGLE[(lam, beta)], abs=2e-3)

    def test_black_scholes_limit(self, market):
        assert fdm.price(market, GrantSpec(1), ExercisePolicy.constant(0)) == pytest.approx(V_STAR, abs=1e-2)

    def test_shape(self, market, uniform):
        surf = fdm.solve_vested_cn(market, GrantSpec(4, 0, 0, 0.3), ExercisePolicy.constant(1, uniform), times=[0.0, 5.0])
        band = (surf.s >= 10) & (surf.s <= 24)
        for t in (0.0, 5.0):
            v = surf.slice(t)
            assert np.all(v >= 0)
            assert np.all(np.diff(v[:, band], axis=1) >= 0)
            assert np.all(np.diff(v, axis=0) >= -1e-12)

    def test_boundary_consistency(self, market, uniform):
        g = GrantSpec(3, 0, 0, 0.1)
        pol = ExercisePolicy.constant(1, uniform)
        surf = fdm.solve_vested_cn(market, g, pol)
        bc = fdm.boundary_coefficients(market, g, pol, [0.0])
        s = surf.s[-2]
        for m in (1, 2, 3):
            ansatz = bc.value(m, 0, s, market.K)
            assert abs(surf.slice(m=m)[-2] - ansatz) <= 1e-3 * ansatz

    def test_time_dependent_matches_constant(self, market, uniform):
        g = GrantSpec(3, 0, 0, 0.1)
        a = fdm.price(market, g, ExercisePolicy.constant(0.8, uniform))
        b = fdm.price(market, g, ExercisePolicy(TimeIntensity(lambda t: 0.8), uniform))
        assert a == pytest.approx(b, abs=1e-10)

    def test_boundary_options_close(self, market, uniform):
        g = GrantSpec(5, 0, 0, 0.0)
        pol = ExercisePolicy(AffineIntensity(0.2, 0.02), uniform)
        d = fdm.price(market, g, pol, fdm.FdGrid(boundary="dirichlet"))
        n = fdm.price(market, g, pol, fdm.FdGrid(boundary="neumann"))
        assert abs(d - n) < 1e-3

    def test_not_diagonally_dominant(self):
        mk = MarketParams(S0=10, K=10, r=0.5, q=0.0, sigma=0.01, T=5)
        with pytest.raises(ConfigurationError):
            fdm.price(mk, GrantSpec(1), ExercisePolicy.constant(0.1), fdm.FdGrid(dS=1.0, dt=1.0))


class TestUnvested:
    def test_zero_vesting_identity(self, market, uniform):
        g = GrantSpec(2, 0, 0, 0.1)
        vested = fdm.solve_vested_cn(market, g, ExercisePolicy.constant(1, uniform))
        out = fdm.solve_unvested_cn(vested, market, g, ExercisePolicy.constant(1, uniform))
        np.testing.assert_array_equal(out.slice(), vested.slice())

    def test_short_vesting(self, market, uniform):
        pol = ExercisePolicy.constant(1, uniform)
        g = GrantSpec(2, 1e-6, 0, 0.1)
        vested = fdm.solve_vested_cn(market, g, pol)
        out = fdm.solve_unvested_cn(vested, market, g, pol)
        assert np.max(np.abs(out.slice() - vested.slice(g.t_v))) < 1e-5

    @pytest.mark.parametrize("g,lam,expected,tol", [
        (GrantSpec(5, 2, 0.1, 0.0), 1, 7.8399, 1e-3),
        (GrantSpec(5, 2, 1.0, 0.1), 2, 1.1310, 2e-3),
    ])
    def test_table_cells(self, market, uniform, g, lam, expected, tol):
        assert fdm.price(market, g, ExercisePolicy.constant(lam, uniform)) == pytest.approx(expected, abs=tol)

    def test_affine_table_cell(self, market, uniform):
        pol = ExercisePolicy(AffineIntensity(0.2, 0.02), uniform)
        assert fdm.price(market, GrantSpec(5, 4, 0, 0.5), pol) == pytest.approx(12.4068, abs=0.02)


@pytest.mark.slow
def test_second_order_convergence(market, uniform):
    g = GrantSpec(5, 0, 0.1, 0)
    pol = ExercisePolicy.constant(1, uniform)
    v = [fdm.price(market, g, pol, fdm.FdGrid().refined(f)) for f in (1, 2, 4)]
    assert 2.5 <= (v[0] - v[1]) / (v[1] - v[2]) <= 6
