"""Fourier (spectral) solver for the vested cost system and the unvested
continuation.

Work happens on log-moneyness x = ln(s/K). Transforms follow the discrete
convention F(w_k) = phase_k * sum_n f(x_n) exp(-2 pi i k n / N) with
phase_k = exp(-i w_k x_min) dx, so that F approximates the continuous
transform of f restricted to [x_min, x_max].

Three vested variants are provided:

* constant intensity: closed-form transform coefficients, no time stepping;
* time-dependent intensity lambda(t): exponential time stepping in the
  frequency domain;
* affine intensity A(t) - B(t) x: stepping along characteristics, with the
  complex frequency shift realised as a spatial exp(c x) weight.

The payoff x -> (K e^x - K)^+ grows exponentially, so its transform only
exists for the truncated function. The truncation produces a wrap-around
layer near both ends of the grid; results are reliable well inside the
domain (|x| <= 2 at the default grid).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .model import (
    AffineIntensity,
    CostSurface,
    ExercisePolicy,
    GrantSpec,
    MarketParams,
    expected_jump_size,
)

logger = logging.getLogger(__name__)

REAL_TOL = 1e-8
NEG_TOL = 1e-6
# largest exponent of the per-step exp(B dt x) weight at the grid edge
MAX_SHIFT_EXPONENT = 2.0


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform log-moneyness grid and its Nyquist frequency layout."""

    n: int = 2**12
    x_min: float = -10.0
    x_max: float = 10.0
    dt: float = 0.01

    def __post_init__(self):
        if self.n < 4 or self.n & (self.n - 1):
            raise ConfigurationError(f"grid size must be a power of two, got {self.n}")
        if not self.x_max > self.x_min:
            raise ConfigurationError("x_max must exceed x_min")
        if not self.dt > 0:
            raise ConfigurationError("time step must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def omega_max(self) -> float:
        return math.pi / self.dx

    @property
    def domega(self) -> float:
        return 2 * self.omega_max / self.n

    @property
    def omega(self) -> np.ndarray:
        k = np.arange(self.n)
        w = k * self.domega
        w[k > self.n // 2] -= 2 * self.omega_max
        return w

    @property
    def phase(self) -> np.ndarray:
        return np.exp(-1j * self.omega * self.x_min) * self.dx

    def forward(self, f: np.ndarray) -> np.ndarray:
        return self.phase * np.fft.fft(f, axis=-1)

    def inverse(self, F: np.ndarray) -> np.ndarray:
        """Inverse transform; returns the complex array (imaginary part is residue)."""
        return np.fft.ifft(F / self.phase, axis=-1)

    def stock(self, K: float) -> np.ndarray:
        return K * np.exp(self.x)

    def time_levels(self, t0: float, t1: float) -> np.ndarray:
        n_steps = max(1, int(round((t1 - t0) / self.dt)))
        return np.linspace(t0, t1, n_steps + 1)


def payoff_transform(grid: SpectralGrid, K: float) -> np.ndarray:
    """Discrete transform of the truncated payoff x -> (K e^x - K)^+."""
    return grid.forward(np.maximum(K * np.expm1(grid.x), 0.0))


def brute_force_transform(grid: SpectralGrid, f: np.ndarray) -> np.ndarray:
    """Direct O(N^2) evaluation of sum_n f(x_n) exp(-i w_k x_n) dx."""
    return np.exp(-1j * np.outer(grid.omega, grid.x)) @ f * grid.dx


def conjugate_symmetry_error(grid: SpectralGrid, F: np.ndarray) -> float:
    """Largest |F(w) - conj(F(-w))| over frequency pairs present on the grid.

    The Nyquist bin has no partner (only +w_max is on the grid) and is
    skipped; the zero bin must be real.
    """
    F = np.atleast_2d(F)
    n = grid.n
    k = np.arange(1, n // 2)
    pair = np.abs(F[:, k] - np.conj(F[:, n - k])).max()
    return float(max(pair, np.abs(F[:, 0].imag).max()))


def _check_values(out: np.ndarray, what: str) -> np.ndarray:
    """Clamp negative costs to zero, failing on real violations.

    Inside the central half of the grid a value below
    -NEG_TOL * max(1, local scale) is an error; the outer quarters hold the
    wrap-around layer of the truncated payoff and are clamped silently.
    """
    n = out.shape[-1]
    core = out[..., n // 4 : n - n // 4]
    low = core.min()
    if low < -NEG_TOL * max(1.0, float(np.abs(core).max())):
        raise ConfigurationError(f"{what}: negative cost {low:.3g}")
    if low < 0:
        logger.debug("%s: clamping negative values down to %.3g", what, low)
    np.maximum(out, 0.0, out=out)
    return out


def _real_part(f: np.ndarray, what: str) -> np.ndarray:
    """Discard the imaginary residue of an inverse transform, with checks."""
    scale = max(1.0, float(np.abs(f.real).max()))
    resid = float(np.abs(f.imag).max())
    if resid > REAL_TOL * scale:
        raise ConfigurationError(f"{what}: imaginary residue {resid:.3g} exceeds tolerance")
    return _check_values(f.real.copy(), what)


def _nyquist_real(a: np.ndarray, n: int) -> np.ndarray:
    # the lone +w_max bin must act on a real signal symmetrically
    a = np.array(a, dtype=complex)
    a[..., n // 2] = a[..., n // 2].real
    return a


def _base_symbol(market: MarketParams, omega: np.ndarray) -> np.ndarray:
    """Symbol of the log-price generator with its sign flipped: -i w mu + sigma^2 w^2 / 2."""
    mu = market.r - market.q - 0.5 * market.sigma**2
    return -1j * omega * mu + 0.5 * market.sigma**2 * omega**2


def _etd_weights(z: np.ndarray, dt: float):
    """Weights for integrating exp(-hh u) against a source linear in u on [0, dt].

    ``z = hh * dt``. Returns (E, w_new, w_old) with E = exp(-z), where
    w_new multiplies the source at u = 0 and w_old the source at u = dt.
    """
    E = np.exp(-z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    i0 = np.where(small, 1 - z / 2 + z**2 / 6 - z**3 / 24, -np.expm1(-zs) / zs)
    i1 = np.where(small, 0.5 - z / 3 + z**2 / 8 - z**3 / 30, (1 - E * (1 + zs)) / zs**2)
    return E, (i0 - i1) * dt, i1 * dt


def _store_index(levels: np.ndarray, times: Sequence[float] | None, t_default: float):
    times = [t_default] if times is None else list(times)
    idx = []
    for t in times:
        i = int(np.argmin(np.abs(levels - t)))
        if abs(levels[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"requested time {t} is not on the time grid")
        idx.append(i)
    return sorted(set(idx))


def _validate(market: MarketParams, grant: GrantSpec, policy: ExercisePolicy):
    grant.check_against(market)
    if policy.jumps.max_m < grant.M:
        raise DomainError("jump-size table is shorter than the grant")


def _surface(grid, market, levels, idx, values_by_level) -> CostSurface:
    times = levels[idx]
    vals = np.stack([values_by_level[i] for i in idx], axis=1)
    return CostSurface(times=times, s=grid.stock(market.K), values=vals, log_grid=True)


def solve_vested_constant(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    grid: SpectralGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Vested cost for a constant intensity from closed-form transform coefficients.

    The transform of C^(m) at time t is
    sum_k F_k^(m) (T-t)^k exp(-(T-t) h) + F^(m), with the coefficients built
    in increasing m. ``times`` defaults to (t_v,); any t in [t_v, T] works.
    """
    grid = grid or SpectralGrid()
    _validate(market, grant, policy)
    if not policy.is_constant:
        raise DomainError("closed form needs a constant intensity")
    lam = policy.intensity.lam
    if lam < 0:
        raise DomainError("intensity must be >= 0")
    M, beta = grant.M, grant.beta
    phi = payoff_transform(grid, market.K)
    h = _nyquist_real(market.r + lam + beta + _base_symbol(market, grid.omega), grid.n)
    if np.any(np.abs(h) == 0):
        raise DomainError("r + lambda + beta must be positive")

    steady = [None]
    trans = [None]  # trans[m][k] = F_k^(m)
    for m in range(1, M + 1):
        p = policy.jumps.probs(m)
        c_m = lam * expected_jump_size(policy.jumps, m) + m * beta
        src = c_m * phi
        for z in range(1, m):
            src = src + lam * p[z - 1] * steady[m - z]
        F = src / h
        Fk = [m * phi - F]
        for k in range(1, m):
            acc = np.zeros(grid.n, dtype=complex)
            for z in range(1, m - k + 1):
                acc += p[z - 1] * trans[m - z][k - 1]
            Fk.append(lam / k * acc)
        steady.append(F)
        trans.append(Fk)

    times = [grant.t_v] if times is None else list(times)
    for t in times:
        if not grant.t_v - 1e-12 <= t <= market.T + 1e-12:
            raise DomainError(f"time {t} outside [t_v, T]")
    times = np.array(sorted(times))
    vals = np.empty((M, len(times), grid.n))
    for i, t in enumerate(times):
        tau = market.T - t
        decay = np.exp(-tau * h)
        for m in range(1, M + 1):
            G = steady[m].copy()
            for k, Fk in enumerate(trans[m]):
                G += Fk * (tau**k) * decay
            vals[m - 1, i] = _real_part(grid.inverse(G), f"C^({m})(t={t:g})")
    return CostSurface(times=times, s=grid.stock(market.K), values=vals, log_grid=True)


def solve_vested_timedep(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    grid: SpectralGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Vested cost for a deterministic lambda(t) by backward time stepping.

    Each step integrates the decay exactly and the source (coupling to
    lower m plus payoff forcing) with a product trapezoid rule; lambda is
    taken at the step midpoint. Within a step the m-loop runs upwards so the
    new-level source of C^(m) uses the freshly computed lower surfaces.

    Stepping uses the half spectrum of real FFTs: every operation is a
    pointwise multiplication in frequency, so the phase factor of the
    public transform convention cancels and is left out.
    """
    grid = grid or SpectralGrid()
    _validate(market, grant, policy)
    if not policy.intensity.time_only:
        raise DomainError("use solve_vested_affine for state-dependent intensities")
    M, beta, n = grant.M, grant.beta, grid.n
    levels = grid.time_levels(grant.t_v, market.T)
    idx = _store_index(levels, times, grant.t_v)
    payoff = np.maximum(market.K * np.expm1(grid.x), 0.0)
    phi = np.fft.rfft(payoff)
    h0 = market.r + beta + _base_symbol(market, grid.omega[: n // 2 + 1])
    probs = [None] + [policy.jumps.probs(m) for m in range(1, M + 1)]
    pbar = [None] + [expected_jump_size(policy.jumps, m) for m in range(1, M + 1)]

    def source(G, m, lam):
        s = (lam * pbar[m] + m * beta) * phi
        for z in range(1, m):
            s = s + lam * probs[m][z - 1] * G[m - z]
        return s

    G = [None] + [m * phi for m in range(1, M + 1)]
    stored = {}
    if len(levels) - 1 in idx:
        stored[len(levels) - 1] = np.stack([m * payoff for m in range(1, M + 1)])
    for j in range(len(levels) - 1, 0, -1):
        t_new, t_old = levels[j - 1], levels[j]
        dt = t_old - t_new
        lam = float(policy.intensity(0.5 * (t_new + t_old)))
        hh = _nyquist_real(h0 + lam, n)
        E, w_new, w_old = _etd_weights(hh * dt, dt)
        G_new = [None]
        for m in range(1, M + 1):
            g = E * G[m] + w_old * source(G, m, lam) + w_new * source(G_new, m, lam)
            G_new.append(g)
        G = G_new
        if j - 1 in idx:
            stored[j - 1] = np.stack(
                [_check_values(np.fft.irfft(G[m], n), f"C^({m})(t={t_new:g})") for m in range(1, M + 1)]
            )
    return _surface(grid, market, levels, idx, stored)


def solve_vested_affine(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    grid: SpectralGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Vested cost for lambda(t, x) = A(t) - B(t) x along characteristics.

    The characteristic is re-anchored at every step: over [t, t + dt] the
    old level is weighted by exp(B dt x) (the frequency shift w + i B dt),
    the decay integrates h along the shifted frequency exactly, and the
    source uses the same product trapezoid rule as the time-dependent
    solver. Products with lambda(x) are formed on the spatial grid, which
    is how the x-multiplication of the source enters.
    """
    grid = grid or SpectralGrid()
    _validate(market, grant, policy)
    lam_fn = policy.intensity
    if not isinstance(lam_fn, AffineIntensity):
        raise DomainError("affine solver needs an AffineIntensity")
    if lam_fn.x_bound < max(abs(grid.x_min), abs(grid.x_max)) - 1e-12:
        logger.warning("intensity validated on |x| <= %g only; clipped beyond", lam_fn.x_bound)
    M, beta, sig2, n = grant.M, grant.beta, market.sigma**2, grid.n
    mu = market.r - market.q - 0.5 * sig2
    x, w = grid.x, grid.omega[: n // 2 + 1]
    rfft, irfft = np.fft.rfft, np.fft.irfft
    levels = grid.time_levels(grant.t_v, market.T)
    idx = _store_index(levels, times, grant.t_v)
    payoff = np.maximum(market.K * np.expm1(x), 0.0)
    probs = [None] + [policy.jumps.probs(m) for m in range(1, M + 1)]
    pbar = np.array([0.0] + [expected_jump_size(policy.jumps, m) for m in range(1, M + 1)])
    ms = np.arange(M + 1)

    cache = {}

    def step_data(a, b, dt):
        key = (a, b, dt)
        if key not in cache:
            if abs(b) * dt * max(abs(grid.x_min), abs(grid.x_max)) > MAX_SHIFT_EXPONENT:
                raise ConfigurationError(
                    f"shift weight exp({abs(b) * dt:g} x) too large on this grid; reduce dt"
                )
            # integral of h(t+u, w + i b u) du over [0, dt]
            hint = (
                (market.r + a + beta) * dt
                - 1j * mu * w * dt
                + mu * b * dt**2 / 2
                + 0.5 * sig2 * (w**2 * dt + 1j * w * b * dt**2 - b**2 * dt**3 / 3)
            )
            E, w_new, w_old = _etd_weights(_nyquist_real(hint, n), dt)
            lam_x = a - b * np.clip(x, -lam_fn.x_bound, lam_fn.x_bound)
            weight = np.exp(b * dt * x)
            forcing = (lam_x * pbar[1:, None] + ms[1:, None] * beta) * payoff
            cache.clear()
            cache[key] = (E, w_new, w_old, lam_x, weight, rfft(forcing), rfft(forcing * weight))
        return cache[key]

    f = np.stack([m * payoff for m in range(1, M + 1)])
    stored = {}
    if len(levels) - 1 in idx:
        stored[len(levels) - 1] = f.copy()
    for j in range(len(levels) - 1, 0, -1):
        t_new, t_old = levels[j - 1], levels[j]
        dt = t_old - t_new
        t_mid = 0.5 * (t_new + t_old)
        E, w_new, w_old, lam_x, weight, R, Rw = step_data(
            float(lam_fn.A(t_mid)), float(lam_fn.B(t_mid)), dt
        )
        old = rfft(np.concatenate([f * weight, f * (lam_x * weight)]))
        Fw, Lw = old[:M], old[M:]
        f_new = np.empty_like(f)
        L_new = np.empty_like(Lw)
        for m in range(1, M + 1):
            p = probs[m]
            src_old, src_new = Rw[m - 1].copy(), R[m - 1].copy()
            for z in range(1, m):
                src_old += p[z - 1] * Lw[m - z - 1]
                src_new += p[z - 1] * L_new[m - z - 1]
            G = E * Fw[m - 1] + w_old * src_old + w_new * src_new
            f_new[m - 1] = _check_values(irfft(G, n), f"C^({m})(t={t_new:g})")
            if m < M:
                L_new[m - 1] = rfft(lam_x * f_new[m - 1])
        f = f_new
        if j - 1 in idx:
            stored[j - 1] = f.copy()
    return _surface(grid, market, levels, idx, stored)


def solve_vested(market, grant, policy, grid=None, times=None) -> CostSurface:
    """Dispatch on the intensity type."""
    if policy.is_constant:
        return solve_vested_constant(market, grant, policy, grid, times)
    if policy.intensity.time_only:
        return solve_vested_timedep(market, grant, policy, grid, times)
    return solve_vested_affine(market, grant, policy, grid, times)


def solve_unvested(
    vested_at_tv,
    market: MarketParams,
    grant: GrantSpec,
    grid: SpectralGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Discount the vested slice at t_v back through the vesting period.

    ``vested_at_tv`` is a CostSurface holding the t_v level or an (M, n)
    array of values on the grid. Each requested time t in [0, t_v] is
    reached by one multiplication with exp(-h~ (t_v - t)), h~ carrying the
    pre-vesting departure rate alpha. With t_v = 0 the slice is returned
    unchanged.
    """
    grid = grid or SpectralGrid()
    if isinstance(vested_at_tv, CostSurface):
        slab = vested_at_tv.slice(grant.t_v)
    else:
        slab = np.atleast_2d(np.asarray(vested_at_tv, dtype=float))
    if slab.shape[-1] != grid.n:
        raise ConfigurationError("vested slice does not live on this spectral grid")
    times = np.array(sorted([0.0] if times is None else times), dtype=float)
    if np.any(times < -1e-12) or np.any(times > grant.t_v + 1e-12):
        raise DomainError("unvested times must lie in [0, t_v]")
    M = slab.shape[0]
    vals = np.empty((M, len(times), grid.n))
    if grant.t_v == 0:
        vals[:] = slab[:, None, :]
        return CostSurface(times=times, s=grid.stock(market.K), values=vals, log_grid=True)
    G = grid.forward(slab)
    htil = _nyquist_real(
        market.r + grant.alpha + _base_symbol(market, grid.omega), grid.n
    )
    for i, t in enumerate(times):
        Gt = np.exp(-htil * (grant.t_v - t)) * G
        for m in range(M):
            vals[m, i] = _real_part(grid.inverse(Gt[m]), f"unvested C^({m + 1})(t={t:g})")
    return CostSurface(times=times, s=grid.stock(market.K), values=vals, log_grid=True)


def price(market, grant, policy, grid=None) -> float:
    """Cost at time 0 and S0 of the whole grant (unvested if t_v > 0)."""
    grid = grid or SpectralGrid()
    vested = solve_vested(market, grant, policy, grid)
    if grant.t_v > 0:
        return solve_unvested(vested, market, grant, grid).at(market.S0)
    return vested.at(market.S0)
