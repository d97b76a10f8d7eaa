"""Domain types shared by every solver: market and grant parameters, exercise
intensities, jump-size distributions, cost surfaces and the Black-Scholes call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr

from .exceptions import DomainError, ValidationError

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MarketParams:
    """Stock dynamics and contract economics."""

    S0: float
    K: float
    r: float
    q: float
    sigma: float
    T: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValidationError(f"K must be positive, got {self.K}")
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not self.T > 0:
            raise ValidationError(f"T must be positive, got {self.T}")
        if self.S0 < 0:
            raise ValidationError(f"S0 must be nonnegative, got {self.S0}")
        if self.r < 0 or self.q < 0:
            raise ValidationError("r and q must be nonnegative")

    def replace(self, **kw) -> "MarketParams":
        return MarketParams(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class GrantSpec:
    """Grant size, vesting date and job-termination intensities.

    ``alpha`` applies during vesting (departure forfeits everything),
    ``beta`` after vesting (departure forces exercise of what is left).
    """

    M: int
    t_v: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError(f"M must be an integer >= 1, got {self.M}")
        if self.t_v < 0:
            raise ValidationError(f"t_v must be >= 0, got {self.t_v}")
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("termination intensities must be >= 0")

    def check_against(self, market: MarketParams) -> None:
        if self.t_v > market.T:
            raise ValidationError(f"vesting time {self.t_v} exceeds maturity {market.T}")

    def replace(self, **kw) -> "GrantSpec":
        return GrantSpec(**{**self.__dict__, **kw})


class JumpSizeDistribution:
    """Probabilities p_{m,z} of exercising z options when m are still held.

    Use the ``unit`` and ``uniform`` constructors for the two standard shapes,
    or pass ``table`` where ``table[m-1]`` lists p_{m,1..m}.
    """

    def __init__(self, kind: str = "unit", table: Sequence[Sequence[float]] | None = None):
        if kind not in ("unit", "uniform", "custom"):
            raise ValidationError(f"unknown jump-size kind {kind!r}")
        self.kind = kind
        self._rows: list[np.ndarray] = []
        if kind == "custom":
            if table is None:
                raise ValidationError("custom jump-size distribution needs a table")
            for i, row in enumerate(table):
                m = i + 1
                p = np.asarray(row, dtype=float)
                if p.shape != (m,):
                    raise ValidationError(f"row {m} must hold {m} probabilities, got {p.shape}")
                if np.any(p < 0):
                    raise ValidationError(f"row {m} has negative probabilities")
                if abs(math.fsum(p) - 1.0) > ROW_SUM_TOL:
                    raise ValidationError(f"row {m} sums to {math.fsum(p)!r}, not 1")
                self._rows.append(p)
        elif table is not None:
            raise ValidationError(f"{kind} distribution takes no table")

    @classmethod
    def unit(cls) -> "JumpSizeDistribution":
        return cls("unit")

    @classmethod
    def uniform(cls) -> "JumpSizeDistribution":
        return cls("uniform")

    @classmethod
    def custom(cls, table) -> "JumpSizeDistribution":
        return cls("custom", table)

    @property
    def max_m(self) -> float:
        return len(self._rows) if self.kind == "custom" else math.inf

    def probs(self, m: int) -> np.ndarray:
        """Array of p_{m,z} for z = 1..m."""
        if int(m) != m or m < 1 or m > self.max_m:
            raise DomainError(f"m={m} outside 1..{self.max_m}")
        m = int(m)
        if self.kind == "unit":
            p = np.zeros(m)
            p[0] = 1.0
            return p
        if self.kind == "uniform":
            return np.full(m, 1.0 / m)
        return self._rows[m - 1].copy()

    def table(self, M: int) -> np.ndarray:
        """Dense (M+1, M) array with row m holding p_{m,1..m}; row 0 is empty."""
        out = np.zeros((M + 1, M))
        for m in range(1, M + 1):
            out[m, :m] = self.probs(m)
        return out

    def to_dict(self) -> dict:
        d = {"jump.kind": self.kind}
        if self.kind == "custom":
            d["jump.table"] = [row.tolist() for row in self._rows]
        return d

    def __repr__(self):
        return f"JumpSizeDistribution({self.kind!r})"


def expected_jump_size(dist: JumpSizeDistribution, m: int) -> float:
    """Mean number of options exercised per event when m remain."""
    p = dist.probs(m)
    if dist.kind == "uniform":
        return (m + 1) / 2  # exact; summing z/m picks up rounding from 1/m
    if dist.kind == "unit":
        return 1.0
    return math.fsum(np.arange(1, m + 1) * p)


# -- exercise intensities ---------------------------------------------------

Scalar = Union[float, Callable[[float], float]]


class Intensity:
    """Exercise intensity lambda(t, x) with x = ln(s/K)."""

    #: intensity does not depend on the stock price
    time_only = True

    def __call__(self, t, x=0.0):
        raise NotImplementedError

    def bound(self, t0: float, t1: float) -> float:
        """Upper bound of lambda on [t0, t1] x truncated log-moneyness domain."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantIntensity(Intensity):
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"intensity must be >= 0, got {self.lam}")

    def __call__(self, t, x=0.0):
        return self.lam + 0.0 * np.asarray(x, dtype=float)

    def bound(self, t0, t1):
        return self.lam


@dataclass(frozen=True)
class PiecewiseIntensity(Intensity):
    """Piecewise-constant lambda(t): ``values[i]`` holds on
    [times[i-1], times[i]), with ``times`` the interior breakpoints."""

    times: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.times) + 1:
            raise ValidationError("need one more value than breakpoints")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("breakpoints must increase")
        if min(self.values) < 0:
            raise DomainError("intensity values must be >= 0")

    def __call__(self, t, x=0.0):
        idx = np.searchsorted(self.times, t, side="right")
        lam = np.asarray(self.values)[idx]
        return lam + 0.0 * np.asarray(x, dtype=float)

    def bound(self, t0, t1):
        i0 = np.searchsorted(self.times, t0, side="right")
        i1 = np.searchsorted(self.times, t1, side="right")
        return max(self.values[i0 : i1 + 1])


class TimeIntensity(Intensity):
    """Arbitrary deterministic lambda(t) given as a callable.

    ``upper`` is a known bound used by the simulator; without it the
    callable is sampled on a 0.01-year grid.
    """

    def __init__(self, func: Callable[[float], float], upper: float | None = None):
        self.func = func
        self.upper = upper

    def __call__(self, t, x=0.0):
        lam = np.vectorize(self.func, otypes=[float])(t)
        if np.any(lam < 0):
            raise DomainError("time-dependent intensity went negative")
        return lam + 0.0 * np.asarray(x, dtype=float)

    def bound(self, t0, t1):
        if self.upper is not None:
            return self.upper
        grid = np.linspace(t0, t1, max(2, int(math.ceil((t1 - t0) / 0.01)) + 1))
        return float(np.max(self(grid)))


def _as_func(v: Scalar) -> Callable:
    if callable(v):
        return v
    c = float(v)
    return lambda t: c + 0.0 * np.asarray(t, dtype=float)


class AffineIntensity(Intensity):
    """lambda(t, x) = A(t) - B(t) x, required nonnegative for |x| <= x_bound.

    A and B are floats or callables of t. Positivity is checked at
    construction on [0, t_max] (every 0.01 years for callables).
    """

    time_only = False

    def __init__(self, A: Scalar, B: Scalar, x_bound: float = 10.0, t_max: float = 50.0):
        self.A_spec, self.B_spec = A, B
        self.A, self.B = _as_func(A), _as_func(B)
        self.x_bound = float(x_bound)
        ts = np.linspace(0.0, t_max, int(round(t_max / 0.01)) + 1)
        a = np.asarray(self.A(ts), dtype=float)
        b = np.asarray(self.B(ts), dtype=float)
        worst = np.minimum(a - b * self.x_bound, a + b * self.x_bound)
        if np.any(worst < 0):
            raise DomainError(
                f"affine intensity is negative on |x| <= {self.x_bound} "
                f"(min {worst.min():.4g})"
            )

    @property
    def is_constant_in_time(self) -> bool:
        return not callable(self.A_spec) and not callable(self.B_spec)

    def __call__(self, t, x=0.0):
        x = np.clip(np.asarray(x, dtype=float), -self.x_bound, self.x_bound)
        return self.A(t) - self.B(t) * x

    def bound(self, t0, t1):
        ts = np.linspace(t0, t1, max(2, int(math.ceil((t1 - t0) / 0.01)) + 1))
        a = np.asarray(self.A(ts), dtype=float)
        b = np.abs(np.asarray(self.B(ts), dtype=float))
        return float(np.max(a + b * self.x_bound))

    def __repr__(self):
        return f"AffineIntensity(A={self.A_spec!r}, B={self.B_spec!r})"


@dataclass(frozen=True)
class ExercisePolicy:
    intensity: Intensity
    jumps: JumpSizeDistribution = field(default_factory=JumpSizeDistribution.unit)

    @classmethod
    def constant(cls, lam: float, jumps: JumpSizeDistribution | None = None):
        return cls(ConstantIntensity(lam), jumps or JumpSizeDistribution.unit())

    @property
    def is_constant(self) -> bool:
        return isinstance(self.intensity, ConstantIntensity)


# -- cost surfaces ----------------------------------------------------------


@dataclass(frozen=True)
class CostSurface:
    """Cost of holding m = 1..M options on a (time, stock price) grid.

    ``values[m-1, i, j]`` is C^(m)(times[i], s[j]). ``log_grid`` marks
    surfaces computed on a uniform log-moneyness grid; interpolation then
    happens in ln(s).
    """

    times: np.ndarray
    s: np.ndarray
    values: np.ndarray
    log_grid: bool = False

    def __post_init__(self):
        M, nt, ns = self.values.shape
        if nt != len(self.times) or ns != len(self.s):
            raise ValidationError("values shape does not match grids")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    def _time_index(self, t: float | None) -> int:
        if t is None:
            return 0
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"time {t} is not a stored level")
        return i

    def slice(self, t: float | None = None, m: int | None = None) -> np.ndarray:
        """Values at time t (earliest stored level by default), all m or one m."""
        i = self._time_index(t)
        if m is None:
            return self.values[:, i, :]
        return self.values[m - 1, i, :]

    def at(self, s0: float, m: int | None = None, t: float | None = None) -> float:
        """Interpolated cost at stock price s0 (cubic in s or ln s)."""
        m = self.M if m is None else m
        y = self.slice(t, m)
        j = np.searchsorted(self.s, s0)
        if j < len(self.s) and abs(self.s[j] - s0) <= 1e-12 * max(1.0, s0):
            return float(y[j])
        lo, hi = max(j - 8, 0), min(j + 8, len(self.s))
        if self.log_grid:
            if s0 <= 0:
                return 0.0
            return float(CubicSpline(np.log(self.s[lo:hi]), y[lo:hi])(math.log(s0)))
        return float(CubicSpline(self.s[lo:hi], y[lo:hi])(s0))

    def rows(self, s_min: float = 0.0, s_max: float = math.inf):
        """Yield (m, t, s, value) tuples restricted to s_min <= s <= s_max."""
        mask = (self.s >= s_min) & (self.s <= s_max)
        for m in range(1, self.M + 1):
            for i, t in enumerate(self.times):
                for s, v in zip(self.s[mask], self.values[m - 1, i, mask]):
                    yield m, float(t), float(s), float(v)


# -- payoffs and Black-Scholes ----------------------------------------------


def call_payoff(s, K):
    """Intrinsic value (s - K)^+."""
    return np.maximum(np.asarray(s, dtype=float) - K, 0.0) if np.ndim(s) else max(s - K, 0.0)


def bs_call(S, K, r, q, sigma, tau):
    """Dividend-adjusted Black-Scholes call with time to maturity ``tau``."""
    if tau < 0:
        raise DomainError(f"negative time to maturity {tau}")
    if tau == 0:
        return call_payoff(S, K)
    S = np.asarray(S, dtype=float)
    with np.errstate(divide="ignore"):
        vol = sigma * math.sqrt(tau)
        d1 = (np.log(S / K) + (r - q + 0.5 * sigma**2) * tau) / vol
    d2 = d1 - vol
    v = S * math.exp(-q * tau) * ndtr(d1) - K * math.exp(-r * tau) * ndtr(d2)
    v = np.where(S > 0, v, 0.0)
    return float(v) if v.ndim == 0 else v
