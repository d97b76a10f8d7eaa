"""Monte Carlo simulation of exercise paths and an independent pricer.

Paths are simulated in fixed-size blocks, each with its own child of a
``SeedSequence``. Block results are concatenated in block order, so
estimates do not depend on how many worker threads run the blocks.

Exercise events are drawn by thinning: candidate times come from a
Poisson clock at a rate bounding the intensity over [t_v, T], the stock is
sampled exactly at each candidate, and a candidate becomes an exercise with
probability lambda(t, S) / bound.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .model import ExercisePolicy, GrantSpec, MarketParams

BLOCK = 10_000


@dataclass
class ExercisePath:
    """One realisation of the grant.

    A forfeited path has no events, ``remaining_at_settlement == 0`` and
    ``settlement_time`` equal to the departure time.
    """

    M: int
    exercise_events: list = field(default_factory=list)  # (time, quantity)
    stock_at_events: list = field(default_factory=list)
    termination_time: float | None = None
    pre_vest_forfeit: bool = False
    settlement_time: float = 0.0
    remaining_at_settlement: int = 0
    stock_at_settlement: float = float("nan")
    payoff: float = 0.0  # discounted to time 0


@dataclass
class _Block:
    payoff: np.ndarray
    weighted_time: np.ndarray  # sum of quantity * time, settlement included
    forfeit: np.ndarray
    paths: list | None = None


def _jump_cdf(policy: ExercisePolicy, M: int) -> np.ndarray:
    cdf = np.cumsum(policy.jumps.table(M), axis=1)
    cdf[:, -1] = 1.0
    return cdf


def _simulate_block(market, grant, policy, rng, n, record=False) -> _Block:
    S0, K, r, q, sig, T = market.S0, market.K, market.r, market.q, market.sigma, market.T
    M, tv = grant.M, grant.t_v
    drift, cdf = r - q - 0.5 * sig**2, _jump_cdf(policy, M)
    lam_fn = policy.intensity
    lam_max = float(lam_fn.bound(tv, T)) if T > tv else 0.0

    zeta = rng.exponential(1.0 / grant.alpha, n) if grant.alpha > 0 else np.full(n, np.inf)
    forfeit = zeta < tv
    xi = rng.exponential(1.0 / grant.beta, n) if grant.beta > 0 else np.full(n, np.inf)
    end = np.minimum(T, tv + xi)

    S = np.full(n, float(S0))
    if tv > 0:
        S *= np.exp(drift * tv + sig * math.sqrt(tv) * rng.standard_normal(n))
    t = np.full(n, float(tv))
    remaining = np.where(forfeit, 0, M)
    payoff = np.zeros(n)
    wtime = np.zeros(n)
    log = [] if record else None

    active = np.flatnonzero(~forfeit)
    if lam_max > 0:
        while active.size:
            dt = rng.exponential(1.0 / lam_max, active.size)
            tc = t[active] + dt
            inside = tc < end[active]
            idx = active[inside]
            dt_in = dt[inside]
            z = rng.standard_normal(idx.size)
            S[idx] *= np.exp(drift * dt_in + sig * np.sqrt(dt_in) * z)
            t[idx] = tc[inside]
            u = rng.random(idx.size)
            lam = np.asarray(lam_fn(t[idx], np.log(S[idx] / K)), dtype=float)
            hit = idx[u * lam_max < lam]
            if hit.size:
                rem = remaining[hit]
                v = rng.random(hit.size)
                size = 1 + np.sum(v[:, None] > cdf[rem], axis=1)
                size = np.minimum(size, rem)
                disc = np.exp(-r * t[hit]) * np.maximum(S[hit] - K, 0.0)
                payoff[hit] += size * disc
                wtime[hit] += size * t[hit]
                remaining[hit] = rem - size
                if record:
                    log.append((hit, t[hit].copy(), size.copy(), S[hit].copy()))
            active = idx[remaining[idx] > 0]

    # settle whatever is left at min(T, t_v + xi)
    left = np.flatnonzero((remaining > 0) & ~forfeit)
    dt = end[left] - t[left]
    S[left] *= np.exp(drift * dt + sig * np.sqrt(dt) * rng.standard_normal(left.size))
    payoff[left] += remaining[left] * np.exp(-r * end[left]) * np.maximum(S[left] - K, 0.0)
    wtime[left] += remaining[left] * end[left]

    paths = None
    if record:
        paths = [ExercisePath(M=M) for _ in range(n)]
        for hit, th, sz, sh in log:
            for i, a, b, c in zip(hit.tolist(), th.tolist(), sz.tolist(), sh.tolist()):
                paths[i].exercise_events.append((a, int(b)))
                paths[i].stock_at_events.append(c)
        for i, p in enumerate(paths):
            p.payoff = float(payoff[i])
            if forfeit[i]:
                p.pre_vest_forfeit = True
                p.settlement_time = float(zeta[i])
                continue
            if tv + xi[i] < T:
                p.termination_time = float(tv + xi[i])
            p.remaining_at_settlement = int(remaining[i])
            if remaining[i] > 0:
                p.settlement_time = float(end[i])
                p.stock_at_settlement = float(S[i])
            else:
                p.settlement_time = p.exercise_events[-1][0]
                p.stock_at_settlement = p.stock_at_events[-1]
    return _Block(payoff, wtime, forfeit, paths)


def _blocks(n_paths: int, seed, block: int):
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    sizes = [block] * (n_paths // block)
    if n_paths % block:
        sizes.append(n_paths % block)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, children))


def _run(market, grant, policy, n_paths, seed, workers, record, block=BLOCK):
    grant.check_against(market)
    jobs = _blocks(n_paths, seed, block)

    def one(job):
        size, ss = job
        return _simulate_block(market, grant, policy, np.random.default_rng(ss), size, record)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, jobs))
    return [one(j) for j in jobs]


def simulate_path(market: MarketParams, grant: GrantSpec, policy: ExercisePolicy, seed) -> ExercisePath:
    return _run(market, grant, policy, 1, seed, 1, True)[0].paths[0]


def simulate_paths(market, grant, policy, n_paths: int, seed, workers: int = 1) -> list:
    out = []
    for b in _run(market, grant, policy, n_paths, seed, workers, True):
        out.extend(b.paths)
    return out


def weighted_avg_exercise_time(path: ExercisePath) -> float:
    """Quantity-weighted mean exercise time; leftover options count as
    exercised at the settlement time."""
    if path.pre_vest_forfeit:
        raise DomainError("weighted exercise time is undefined on a forfeited path")
    total = math.fsum(d * t for t, d in path.exercise_events)
    if path.remaining_at_settlement > 0:
        total += path.remaining_at_settlement * path.settlement_time
    return total / path.M


def mc_price(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    n_paths: int,
    seed,
    workers: int = 1,
) -> tuple[float, float]:
    """Sample mean and standard error of the discounted grant payoff."""
    pay = np.concatenate([b.payoff for b in _run(market, grant, policy, n_paths, seed, workers, False)])
    mean = math.fsum(pay) / pay.size
    if pay.size < 2:
        return mean, float("nan")
    var = math.fsum((pay - mean) ** 2) / (pay.size - 1)
    return mean, math.sqrt(var / pay.size)


def exercise_times(market, grant, policy, n_paths: int, seed, workers: int = 1) -> np.ndarray:
    """tau-bar for every non-forfeited path, in path order."""
    blocks = _run(market, grant, policy, n_paths, seed, workers, False)
    return np.concatenate([b.weighted_time[~b.forfeit] / grant.M for b in blocks])


def histogram_rows(values, bins: int = 50, range_=None):
    """(bin_left, bin_right, count) rows for a tau-bar histogram."""
    counts, edges = np.histogram(values, bins=bins, range=range_)
    return [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]
