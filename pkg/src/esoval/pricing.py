"""Single entry point over the four pricing methods."""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import fdm, fft, matrand, simulation
from .model import ExercisePolicy, GrantSpec, MarketParams

METHODS = ("fft", "fdm", "mr", "mc")


@dataclass(frozen=True)
class PriceResult:
    method: str
    value: float
    stderr: float | None = None
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"method": self.method, "value": self.value, "stderr": self.stderr, "seconds": self.seconds}


def surface(
    method: str,
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    *,
    spectral_grid: fft.SpectralGrid | None = None,
    fd_grid: fdm.FdGrid | None = None,
):
    """Time-0 cost surface (unvested when t_v > 0) from the fft or fdm solver."""
    grant.check_against(market)
    if method == "fft":
        grid = spectral_grid or fft.SpectralGrid()
        vested = fft.solve_vested(market, grant, policy, grid)
        if grant.t_v > 0:
            return fft.solve_unvested(vested, market, grant, grid)
        return vested
    if method == "fdm":
        grid = fd_grid or fdm.FdGrid()
        vested = fdm.solve_vested_cn(market, grant, policy, grid)
        if grant.t_v > 0:
            return fdm.solve_unvested_cn(vested, market, grant, policy, grid)
        return vested
    raise ValueError("surfaces are available from the fft and fdm methods only")


def price(
    method: str,
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    *,
    spectral_grid: fft.SpectralGrid | None = None,
    fd_grid: fdm.FdGrid | None = None,
    kappa: float | None = None,
    kappa_tilde: float | None = None,
    n_paths: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> PriceResult:
    """Grant cost at S0 (time 0) by ``method``."""
    grant.check_against(market)
    t0 = time.perf_counter()
    stderr = None
    if method == "fft":
        value = fft.price(market, grant, policy, spectral_grid)
    elif method == "fdm":
        value = fdm.price(market, grant, policy, fd_grid)
    elif method == "mr":
        value = matrand.price(market, grant, policy, kappa=kappa, kappa_tilde=kappa_tilde)
    elif method == "mc":
        value, stderr = simulation.mc_price(market, grant, policy, n_paths, seed, workers)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return PriceResult(method, float(value), stderr, time.perf_counter() - t0)
