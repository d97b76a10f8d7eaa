import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esoval import fft
from esoval.exceptions import ConfigurationError, DomainError
from esoval.model import (
    AffineIntensity,
    ExercisePolicy,
    GrantSpec,
    PiecewiseIntensity,
    TimeIntensity,
    bs_call,
)

from oracle_values import SINGLE, V_STAR

GRID = fft.SpectralGrid()


def dft_by_definition(grid, f):
    """O(N^2) sum of f(x_n) exp(-i w_k x_n) dx, independent of numpy.fft."""
    out = np.empty(grid.n, dtype=complex)
    x = grid.x
    for lo in range(0, grid.n, 256):
        w = grid.omega[lo : lo + 256, None]
        out[lo : lo + 256] = (f[None, :] * np.exp(-1j * w * x[None, :])).sum(axis=1) * grid.dx
    return out


class TestGrid:
    def test_layout(self):
        g = fft.SpectralGrid(n=8, x_min=-1, x_max=1)
        assert g.dx == pytest.approx(2 / 7)
        assert g.omega_max == pytest.approx(np.pi / g.dx)
        assert g.domega == pytest.approx(2 * g.omega_max / 8)
        np.testing.assert_allclose(g.omega[:5], np.arange(5) * g.domega)
        assert g.omega[4] == pytest.approx(g.omega_max)
        np.testing.assert_allclose(g.omega[5:], np.arange(5, 8) * g.domega - 2 * g.omega_max)

    def test_power_of_two(self):
        with pytest.raises(ConfigurationError):
            fft.SpectralGrid(n=1000)


class TestPayoffTransform:
    def test_round_trip(self, market):
        phi = fft.payoff_transform(GRID, market.K)
        back = GRID.inverse(phi)
        payoff = np.maximum(market.K * np.expm1(GRID.x), 0)
        scale = np.maximum(np.abs(payoff), 1.0)
        assert np.max(np.abs(back - payoff) / scale) < 1e-10

    def test_dc_component(self, market):
        phi = fft.payoff_transform(GRID, market.K)
        payoff = np.maximum(market.K * np.expm1(GRID.x), 0)
        assert phi[0] == pytest.approx(GRID.dx * payoff.sum(), rel=1e-13)

    def test_matches_direct_sum(self, market):
        phi = fft.payoff_transform(GRID, market.K)
        ref = dft_by_definition(GRID, np.maximum(market.K * np.expm1(GRID.x), 0))
        assert np.max(np.abs(phi - ref)) / np.max(np.abs(ref)) < 1e-9

    def test_conjugate_symmetry(self, market):
        phi = fft.payoff_transform(GRID, market.K)
        assert fft.conjugate_symmetry_error(GRID, phi) / np.abs(phi).max() < 1e-10

    @given(st.lists(st.floats(-1e3, 1e3), min_size=64, max_size=64))
    def test_round_trip_random(self, values):
        g = fft.SpectralGrid(n=64, x_min=-3, x_max=3)
        f = np.array(values)
        F = g.forward(f)
        assert np.max(np.abs(g.inverse(F) - f)) <= 1e-10 * max(1.0, np.abs(f).max())
        assert fft.conjugate_symmetry_error(g, F) <= 1e-10 * max(1.0, np.abs(F).max())


class TestConstantIntensity:
    def test_terminal_slice(self, market, uniform):
        g = GrantSpec(3, 0, 0, 0.1)
        surf = fft.solve_vested_constant(market, g, ExercisePolicy.constant(1, uniform), times=[market.T])
        payoff = np.maximum(surf.s - market.K, 0)
        for m in (1, 2, 3):
            assert np.max(np.abs(surf.slice(market.T, m) - m * payoff)) <= 1e-8 * max(1, payoff.max())

    @pytest.mark.parametrize("lam,expected", [(1, 5.4753), (2, 3.7101)])
    def test_table_cells(self, market, uniform, lam, expected):
        g = GrantSpec(5, 0, 0.1, 0)
        assert fft.price(market, g, ExercisePolicy.constant(lam, uniform)) == pytest.approx(expected, abs=1e-3)

    @pytest.mark.parametrize("lam,beta", list(SINGLE))
    def test_single_option_oracle(self, market, lam, beta):
        g = GrantSpec(1, 0, 0, beta)
        assert fft.price(market, g, ExercisePolicy.constant(lam)) == pytest.approx(SINGLE[(lam, beta)], abs=2e-4)

    def test_negative_lambda_rejected(self, market):
        with pytest.raises(DomainError):
            ExercisePolicy.constant(-1.0)

    def test_monotone_in_m(self, market, uniform):
        surf = fft.solve_vested_constant(market, GrantSpec(6, 0, 0, 0.3), ExercisePolicy.constant(0.7, uniform))
        core = np.abs(GRID.x) <= 5
        v = surf.slice()[:, core]
        assert np.all(np.diff(v, axis=0) >= -1e-10)
        assert np.all(v >= 0)

    def test_black_scholes_limit(self, market):
        v = fft.price(market, GrantSpec(1), ExercisePolicy.constant(0))
        assert v == pytest.approx(V_STAR, abs=1e-3)


class TestTimeDependent:
    def test_matches_closed_form(self, market, uniform):
        g = GrantSpec(5, 0, 0, 0.1)
        a = fft.solve_vested_constant(market, g, ExercisePolicy.constant(1, uniform))
        b = fft.solve_vested_timedep(market, g, ExercisePolicy(TimeIntensity(lambda t: 1.0), uniform))
        core = np.abs(GRID.x) <= 2
        assert np.max(np.abs(a.slice()[:, core] - b.slice()[:, core])) <= 1e-6

    def test_zero_intensity_is_black_scholes(self, market):
        v = fft.solve_vested_timedep(market, GrantSpec(1), ExercisePolicy(TimeIntensity(lambda t: 0.0))).at(10.0)
        assert v == pytest.approx(V_STAR, abs=1e-3)

    def test_piecewise_between_constants(self, market, uniform):
        g = GrantSpec(5, 0, 0, 0.1)
        mid = fft.price(market, g, ExercisePolicy(PiecewiseIntensity((5.0,), (2.0, 0.0)), uniform))
        hi = fft.price(market, g, ExercisePolicy.constant(2.0, uniform))
        lo = fft.price(market, g, ExercisePolicy.constant(0.0, uniform))
        assert hi < mid < lo

    def test_intermediate_levels(self, market, uniform):
        g = GrantSpec(2, 0, 0, 0.1)
        pol = ExercisePolicy(TimeIntensity(lambda t: 0.5), uniform)
        surf = fft.solve_vested_timedep(market, g, pol, times=[0.0, 5.0, 10.0])
        ref = fft.solve_vested_constant(market, g, ExercisePolicy.constant(0.5, uniform), times=[5.0])
        assert surf.at(10.0, t=5.0) == pytest.approx(ref.at(10.0, t=5.0), abs=1e-6)
        assert surf.at(12.0, t=10.0) == pytest.approx(4.0, abs=1e-8)


class TestAffine:
    def test_zero_slope_matches_constant(self, market, uniform):
        g = GrantSpec(5, 0, 0, 0.0)
        a = fft.solve_vested_affine(market, g, ExercisePolicy(AffineIntensity(0.2, 0.0), uniform))
        b = fft.solve_vested_constant(market, g, ExercisePolicy.constant(0.2, uniform))
        core = np.abs(GRID.x) <= 2
        assert np.max(np.abs(a.slice()[:, core] - b.slice()[:, core])) <= 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("g,expected", [(GrantSpec(5, 1, 0, 0), 12.8379), (GrantSpec(5, 2, 0.1, 0.5), 7.8946)])
    def test_table_cells(self, market, uniform, g, expected):
        pol = ExercisePolicy(AffineIntensity(0.2, 0.02), uniform)
        assert fft.price(market, g, pol) == pytest.approx(expected, abs=0.02)

    def test_shift_cap(self, market):
        pol = ExercisePolicy(AffineIntensity(5.0, 0.4, x_bound=10))
        with pytest.raises(ConfigurationError):
            fft.solve_vested_affine(market, GrantSpec(1), pol, fft.SpectralGrid(dt=1.0))

    def test_wrong_intensity(self, market):
        with pytest.raises(DomainError):
            fft.solve_vested_affine(market, GrantSpec(1), ExercisePolicy.constant(1))


class TestUnvested:
    def test_certain_forfeiture(self, market, uniform):
        g = GrantSpec(3, 2, 1e3, 0.1)
        vested = fft.solve_vested(market, g, ExercisePolicy.constant(1, uniform))
        surf = fft.solve_unvested(vested, market, g)
        core = np.abs(GRID.x) <= 5
        assert np.max(np.abs(surf.slice()[:, core])) <= 1e-6

    def test_zero_vesting_is_identity(self, market, uniform):
        g = GrantSpec(3, 0, 0.5, 0.1)
        vested = fft.solve_vested(market, g, ExercisePolicy.constant(1, uniform))
        np.testing.assert_array_equal(fft.solve_unvested(vested, market, g).slice(), vested.slice())

    def test_discounted_black_scholes(self, market):
        # no exercise and no post-vest departure: e^{-alpha t_v} times the call
        g = GrantSpec(1, 3, 0.2, 0)
        v = fft.price(market, g, ExercisePolicy.constant(0))
        assert v == pytest.approx(np.exp(-0.2 * 3) * V_STAR, abs=1e-3)

    @pytest.mark.parametrize("alpha,expected", [(1.0, 0.2226), (0.0, 12.1517)])
    def test_table_cells(self, market, uniform, alpha, expected):
        g = GrantSpec(5, 4, alpha, 0.1)
        assert fft.price(market, g, ExercisePolicy.constant(1, uniform)) == pytest.approx(expected, abs=1e-3)

    def test_accepts_raw_slab(self, market):
        slab = np.maximum(GRID.stock(market.K) - market.K, 0)[None, :]
        surf = fft.solve_unvested(slab, market, GrantSpec(1, 2))
        assert surf.at(10.0) == pytest.approx(bs_call(10, 10, 0.05, 0.015, 0.2, 2), abs=1e-3)

    def test_negative_time_rejected(self, market):
        slab = np.zeros((1, GRID.n))
        with pytest.raises(DomainError):
            fft.solve_unvested(slab, market, GrantSpec(1, 2), times=[3.0])


class TestDiagnostics:
    def test_large_negative_values_raise(self):
        bad = np.zeros(16)
        bad[8] = -1.0
        with pytest.raises(ConfigurationError):
            fft._check_values(bad, "test")

    def test_roundoff_clamped(self):
        v = np.zeros(16)
        v[8] = -1e-9
        assert fft._check_values(v, "test").min() == 0.0
