"""Crank-Nicolson finite differences for the vested and unvested cost systems.

The far boundary S_* uses the linear ansatz A_m(t) s - B_m(t) K, whose
coefficients solve a small linear ODE system, or a zero-gamma closure
(d^2C/ds^2 = 0) for stock-dependent intensities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import ConfigurationError, DomainError
from .model import CostSurface, ExercisePolicy, GrantSpec, MarketParams, expected_jump_size

logger = logging.getLogger(__name__)

BOUNDARIES = ("auto", "dirichlet", "neumann")


@dataclass(frozen=True)
class FdGrid:
    S_star: float = 30.0
    dS: float = 0.1
    dt: float = 0.1
    boundary: str = "auto"

    def __post_init__(self):
        if not (self.dS > 0 and self.dt > 0):
            raise ConfigurationError("grid steps must be positive")
        n = self.S_star / self.dS
        if abs(n - round(n)) > 1e-9 * n:
            raise ConfigurationError("S_star must be an integer multiple of dS")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}")

    @property
    def n_space(self) -> int:
        return int(round(self.S_star / self.dS))

    @property
    def s(self) -> np.ndarray:
        return self.dS * np.arange(self.n_space + 1)

    def time_levels(self, t0: float, t1: float) -> np.ndarray:
        n = max(1, int(round((t1 - t0) / self.dt)))
        return np.linspace(t0, t1, n + 1)

    def refined(self, factor: int = 2) -> "FdGrid":
        return FdGrid(self.S_star, self.dS / factor, self.dt / factor, self.boundary)


@dataclass(frozen=True)
class BoundaryCoefficients:
    """A_m(t), B_m(t) of the far-field ansatz, rows m = 1..M."""

    times: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def value(self, m: int, i: int, s: float, K: float) -> float:
        return self.A[m - 1, i] * s - self.B[m - 1, i] * K


def boundary_coefficients(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    times: Sequence[float],
    s_eval: float | None = None,
) -> BoundaryCoefficients:
    """Integrate the linear ODE pair for A_m, B_m backwards from A_m(T) = B_m(T) = m.

    A stock-dependent intensity is frozen at ``s_eval`` (the solvers pass
    S_*; K when omitted).
    """
    M, beta = grant.M, grant.beta
    K = market.K
    x_eval = 0.0 if s_eval is None else math.log(s_eval / K)
    P = np.zeros((M, M))
    for m in range(1, M + 1):
        p = policy.jumps.probs(m)
        for z in range(1, m):
            P[m - 1, m - z - 1] = p[z - 1]
    pbar = np.array([expected_jump_size(policy.jumps, m) for m in range(1, M + 1)])
    ms = np.arange(1, M + 1, dtype=float)
    T = market.T

    def rhs(tau, y):
        lam = float(policy.intensity(T - tau, x_eval))
        a, b = y[:M], y[M:]
        c = lam * pbar + ms * beta
        da = -(market.q + lam + beta) * a + lam * (P @ a) + c
        db = -(market.r + lam + beta) * b + lam * (P @ b) + c
        return np.concatenate([da, db])

    times = np.asarray(times, dtype=float)
    taus = np.sort(T - times)
    y0 = np.concatenate([ms, ms])
    if taus[-1] <= 0:
        sol_y = np.repeat(y0[:, None], len(taus), axis=1)
    else:
        sol = solve_ivp(
            rhs, (0.0, taus[-1]), y0, method="DOP853", t_eval=taus, rtol=1e-12, atol=1e-13
        )
        if not sol.success:
            raise ConfigurationError(f"boundary ODE failed: {sol.message}")
        sol_y = sol.y
    order = np.argsort(T - times)
    A = np.empty((M, len(times)))
    B = np.empty((M, len(times)))
    A[:, order] = sol_y[:M]
    B[:, order] = sol_y[M:]
    return BoundaryCoefficients(times=times, A=A, B=B)


class _Tridiag:
    """Pre-factored tridiagonal system solved by the Thomas algorithm."""

    def __init__(self, lower, diag, upper, check_rows: int | None = None):
        n = len(diag)
        rows = n if check_rows is None else check_rows
        lo = np.abs(np.concatenate([[0.0], lower]))[:rows]
        up = np.abs(np.concatenate([upper, [0.0]]))[:rows]
        if np.any(np.abs(diag[:rows]) < lo + up):
            raise ConfigurationError("tridiagonal system is not diagonally dominant; refine the grid")
        self.a = [0.0] + list(map(float, lower))
        c = list(map(float, upper)) + [0.0]
        d = list(map(float, diag))
        cp = [0.0] * n
        dp = [0.0] * n
        dp[0] = d[0]
        cp[0] = c[0] / d[0]
        for i in range(1, n):
            dp[i] = d[i] - self.a[i] * cp[i - 1]
            if abs(dp[i]) < 1e-300:
                raise ConfigurationError("zero pivot in tridiagonal solve")
            cp[i] = c[i] / dp[i]
        self.cp, self.dp, self.n = cp, dp, n

    def solve(self, rhs) -> np.ndarray:
        a, cp, dp, n = self.a, self.cp, self.dp, self.n
        y = rhs.tolist()
        y[0] = y[0] / dp[0]
        for i in range(1, n):
            y[i] = (y[i] - a[i] * y[i - 1]) / dp[i]
        for i in range(n - 2, -1, -1):
            y[i] -= cp[i] * y[i + 1]
        return np.array(y)


def _boundary_mode(grid: FdGrid, policy: ExercisePolicy) -> str:
    if grid.boundary != "auto":
        return grid.boundary
    return "dirichlet" if policy.intensity.time_only else "neumann"


def solve_vested_cn(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    grid: FdGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Vested cost surface on [t_v, T] x [0, S_*] by Crank-Nicolson.

    Time runs backwards; within each step m increases so that the coupling
    to C^(m-z) averages the two time levels of already solved surfaces.
    The intensity is evaluated at the half-step time. ``times`` selects the
    stored levels (default t_v).
    """
    grid = grid or FdGrid()
    grant.check_against(market)
    if grid.S_star <= market.K:
        raise ConfigurationError("far boundary must exceed the strike")
    mode = _boundary_mode(grid, policy)
    M, beta, K = grant.M, grant.beta, market.K
    levels = grid.time_levels(grant.t_v, market.T)
    store = _store(levels, times, grant.t_v)
    s = grid.s
    N = grid.n_space
    j = np.arange(1, N)
    sig2j2 = market.sigma**2 * j**2
    drift = (market.r - market.q) * j
    with np.errstate(divide="ignore"):
        x_int = np.log(s[1:N] / K)
    payoff = np.maximum(s - K, 0.0)
    probs = [None] + [policy.jumps.probs(m) for m in range(1, M + 1)]
    pbar = [None] + [expected_jump_size(policy.jumps, m) for m in range(1, M + 1)]
    bc = None
    if mode == "dirichlet":
        bc = boundary_coefficients(market, grant, policy, levels, s_eval=grid.S_star)

    V = np.stack([m * payoff for m in range(1, M + 1)])
    out = {len(levels) - 1: V.copy()} if len(levels) - 1 in store else {}
    systems = {}
    for i in range(len(levels) - 1, 0, -1):
        dt = levels[i] - levels[i - 1]
        t_mid = 0.5 * (levels[i] + levels[i - 1])
        lam = np.broadcast_to(policy.intensity(t_mid, x_int), j.shape).astype(float)
        al = 0.5 * sig2j2 - 0.5 * drift
        be = -sig2j2 - (market.r + beta + lam)
        ga = 0.5 * sig2j2 + 0.5 * drift
        key = (dt, lam.tobytes())
        if key not in systems:
            lower = -0.5 * dt * al[1:].copy()
            diag = 1 - 0.5 * dt * be
            upper = -0.5 * dt * ga[:-1]
            if mode == "neumann":
                lower[-1] = -0.5 * dt * (al[-1] - ga[-1])
                diag = diag.copy()
                diag[-1] = 1 - 0.5 * dt * (be[-1] + 2 * ga[-1])
            systems.clear()
            systems[key] = _Tridiag(lower, diag, upper, check_rows=N - 2)
        sys_ = systems[key]
        V_new = np.empty_like(V)
        for m in range(1, M + 1):
            old = V[m - 1]
            Lold = al * old[:-2] + be * old[1:-1] + ga * old[2:]
            coupling = np.zeros(N - 1)
            for z in range(1, m):
                pz = probs[m][z - 1]
                coupling += pz * 0.5 * (V[m - z - 1, 1:-1] + V_new[m - z - 1, 1:-1])
            src = lam * coupling + (lam * pbar[m] + m * beta) * payoff[1:-1]
            rhs = old[1:-1] + 0.5 * dt * Lold + dt * src
            new = np.empty(N + 1)
            new[0] = 0.0
            if mode == "dirichlet":
                new[N] = bc.value(m, i - 1, grid.S_star, K)
                rhs[-1] += 0.5 * dt * ga[-1] * new[N]
                new[1:N] = sys_.solve(rhs)
            else:
                new[1:N] = sys_.solve(rhs)
                new[N] = 2 * new[N - 1] - new[N - 2]
            V_new[m - 1] = new
        V = V_new
        if i - 1 in store:
            out[i - 1] = V.copy()
    return _assemble(levels, store, out, s)


def solve_unvested_cn(
    vested,
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    grid: FdGrid | None = None,
    times: Sequence[float] | None = None,
) -> CostSurface:
    """Unvested cost on [0, t_v] from the vested slice at t_v.

    The far field is the discounted ansatz
    exp(-(q+alpha)(t_v-t)) A_m(t_v) S_* - exp(-(r+alpha)(t_v-t)) B_m(t_v) K.
    ``vested`` is a CostSurface holding t_v or an (M, n_space+1) array.
    """
    grid = grid or FdGrid()
    slab = vested.slice(grant.t_v) if isinstance(vested, CostSurface) else np.atleast_2d(vested)
    s = grid.s
    N = grid.n_space
    if slab.shape[-1] != N + 1:
        raise ConfigurationError("vested slice does not live on this grid")
    t_v, alpha, K = grant.t_v, grant.alpha, market.K
    M = slab.shape[0]
    if t_v == 0:
        ts = np.array([0.0])
        return CostSurface(times=ts, s=s.copy(), values=slab[:, None, :].copy())
    levels = grid.time_levels(0.0, t_v)
    store = _store(levels, [0.0] if times is None else times, 0.0)
    bc = boundary_coefficients(market, grant, policy, [t_v], s_eval=grid.S_star)
    A_tv, B_tv = bc.A[:, 0], bc.B[:, 0]
    j = np.arange(1, N)
    sig2j2 = market.sigma**2 * j**2
    drift = (market.r - market.q) * j
    al = 0.5 * sig2j2 - 0.5 * drift
    be = -sig2j2 - (market.r + alpha)
    ga = 0.5 * sig2j2 + 0.5 * drift
    V = slab.astype(float).copy()
    out = {len(levels) - 1: V.copy()} if len(levels) - 1 in store else {}
    sys_ = None
    for i in range(len(levels) - 1, 0, -1):
        dt = levels[i] - levels[i - 1]
        if sys_ is None or abs(sys_dt - dt) > 1e-14:
            sys_ = _Tridiag(-0.5 * dt * al[1:], 1 - 0.5 * dt * be, -0.5 * dt * ga[:-1])
            sys_dt = dt
        tau = t_v - levels[i - 1]
        V_new = np.empty_like(V)
        for m in range(M):
            old = V[m]
            far = (
                math.exp(-(market.q + alpha) * tau) * A_tv[m] * grid.S_star
                - math.exp(-(market.r + alpha) * tau) * B_tv[m] * K
            )
            rhs = old[1:-1] + 0.5 * dt * (al * old[:-2] + be * old[1:-1] + ga * old[2:])
            rhs[-1] += 0.5 * dt * ga[-1] * far
            new = np.empty(N + 1)
            new[0], new[N] = 0.0, far
            new[1:N] = sys_.solve(rhs)
            V_new[m] = new
        V = V_new
        if i - 1 in store:
            out[i - 1] = V.copy()
    return _assemble(levels, store, out, s)


def _store(levels, times, default):
    times = [default] if times is None else list(times)
    idx = []
    for t in times:
        i = int(np.argmin(np.abs(levels - t)))
        if abs(levels[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"requested time {t} is not on the time grid")
        idx.append(i)
    return sorted(set(idx))


def _assemble(levels, store, out, s) -> CostSurface:
    vals = np.stack([out[i] for i in store], axis=1)
    if vals.min() < -1e-8:
        logger.debug("FDM surface dips to %.3g", vals.min())
    return CostSurface(times=levels[store], s=s.copy(), values=vals)


def price(market, grant, policy, grid=None) -> float:
    """Cost at time 0 and S0 of the whole grant (unvested if t_v > 0)."""
    grid = grid or FdGrid()
    vested = solve_vested_cn(market, grant, policy, grid)
    if grant.t_v > 0:
        return solve_unvested_cn(vested, market, grant, policy, grid).at(market.S0)
    return vested.at(market.S0)
