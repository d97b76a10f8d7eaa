"""Maturity randomization: closed-form costs when the remaining maturity
(and optionally the vesting date) is replaced by an exponential time.

Above the strike the vested cost is A s + B K plus log-power corrections
decaying like (s/K)^(gamma - theta); below the strike it is a sum of
log-power terms growing like (s/K)^(gamma + theta). Coefficients follow a
recursion in m that is lower triangular through the jump-size probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .model import ExercisePolicy, GrantSpec, MarketParams, expected_jump_size


@dataclass(frozen=True)
class MrParams:
    """ODE coefficients and exponents for one (market, lambda, beta, kappa)."""

    lam: float
    beta: float
    kappa: float
    a0: float
    a1: float
    a2: float
    gamma: float
    theta: float

    @classmethod
    def build(cls, market: MarketParams, lam: float, beta: float, kappa: float) -> "MrParams":
        if kappa <= 0:
            raise DomainError(f"kappa must be positive, got {kappa}")
        a0 = -(market.r + lam + beta + kappa)
        a1 = market.r - market.q
        a2 = 0.5 * market.sigma**2
        gamma = 0.5 - a1 / market.sigma**2
        theta = math.sqrt(gamma**2 - a0 / a2)
        return cls(lam, beta, kappa, a0, a1, a2, gamma, theta)

    def g(self, m: int, pbar: float) -> float:
        return self.lam * pbar + m * (self.beta + self.kappa)

    def slope(self, sign: int) -> float:
        """a1 + 2 a2 (gamma -/+ theta) - a2 for sign = -1 / +1."""
        d = self.a1 + 2 * self.a2 * (self.gamma + sign * self.theta) - self.a2
        if d == 0:
            raise DomainError(
                "degenerate parameters: a1 + 2 a2 (gamma %s theta) - a2 vanishes"
                % ("+" if sign > 0 else "-")
            )
        return d


@dataclass
class MrCoefficients:
    """Piecewise closed-form coefficients, lists indexed by m (entry 0 unused).

    E[m][n], F[m][n] for n = 0..m-1 multiply ln(s/K)^n (s/K)^(gamma -/+ theta).
    The unvested fields stay empty until :func:`mr_unvested_coefficients`.
    """

    K: float
    params: MrParams
    A: list
    B: list
    E: list
    F: list
    kappa_tilde: float | None = None
    theta_tilde: float | None = None
    At: list = field(default_factory=list)
    Bt: list = field(default_factory=list)
    Et: list = field(default_factory=list)
    Ft: list = field(default_factory=list)
    Et_h: list = field(default_factory=list)
    Ft_h: list = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.A) - 1


def _constant_lambda(policy: ExercisePolicy) -> float:
    if not policy.is_constant:
        raise DomainError("maturity randomization needs a constant intensity")
    return policy.intensity.lam


def mr_coefficients(
    market: MarketParams, grant: GrantSpec, policy: ExercisePolicy, kappa: float
) -> MrCoefficients:
    """Vested coefficients, built in increasing m.

    For each m: (A_m, B_m), then E/F at n = m-1, descending n down to 1,
    and finally (E_m0, F_m0) from value and slope matching at s = K.
    """
    lam = _constant_lambda(policy)
    pr = MrParams.build(market, lam, grant.beta, kappa)
    K, M = market.K, grant.M
    gam, th, a2 = pr.gamma, pr.theta, pr.a2
    den_e, den_f = pr.slope(-1), pr.slope(+1)
    A, B, E, F = [None], [None], [None], [None]
    for m in range(1, M + 1):
        p = policy.jumps.probs(m)
        g = pr.g(m, expected_jump_size(policy.jumps, m))
        A.append((-lam * math.fsum(p[z - 1] * A[m - z] for z in range(1, m)) - g) / (pr.a1 + pr.a0))
        B.append((-lam * math.fsum(p[z - 1] * B[m - z] for z in range(1, m)) + g) / pr.a0)
        e = [0.0] * (m + 1)
        f = [0.0] * (m + 1)
        for n in range(m - 1, 0, -1):
            se = math.fsum(p[z - 1] * E[m - z][n - 1] for z in range(1, m - n + 1))
            sf = math.fsum(p[z - 1] * F[m - z][n - 1] for z in range(1, m - n + 1))
            e[n] = -(lam * se + (n + 1) * n * a2 * e[n + 1]) / (n * den_e)
            f[n] = -(lam * sf + (n + 1) * n * a2 * f[n + 1]) / (n * den_f)
        ab = (A[m] + B[m]) * K
        e[0] = -((gam + th) * ab - A[m] * K + f[1] - e[1]) / (2 * th)
        f[0] = -((gam - th) * ab - A[m] * K + f[1] - e[1]) / (2 * th)
        E.append(e[:m])
        F.append(f[:m])
    return MrCoefficients(K=K, params=pr, A=A, B=B, E=E, F=F)


def mr_unvested_coefficients(
    coeffs: MrCoefficients, market: MarketParams, grant: GrantSpec, kappa_tilde: float
) -> MrCoefficients:
    """Add the randomized-vesting coefficients to a copy of ``coeffs``."""
    if kappa_tilde <= 0:
        raise DomainError("kappa_tilde must be positive")
    pr, K, kt, alpha = coeffs.params, coeffs.K, kappa_tilde, grant.alpha
    R = pr.lam + pr.beta + pr.kappa - alpha - kt
    if abs(R) <= 1e-12 * (pr.lam + pr.beta + pr.kappa + alpha + kt):
        raise DomainError(
            "lambda + beta + kappa equals alpha + kappa_tilde; the closed form assumes they differ"
        )
    gam, th, s2 = pr.gamma, pr.theta, market.sigma**2
    th_t = math.sqrt(gam**2 + 2 * (market.r + alpha + kt) / s2)
    P1 = market.r - market.q + s2 * (2 * gam - 2 * th - 1) / 2
    Q1 = market.r - market.q + s2 * (2 * gam + 2 * th - 1) / 2
    out = MrCoefficients(K=K, params=pr, A=coeffs.A, B=coeffs.B, E=coeffs.E, F=coeffs.F)
    out.kappa_tilde, out.theta_tilde = kt, th_t
    out.At, out.Bt, out.Et, out.Ft = [None], [None], [None], [None]
    out.Et_h, out.Ft_h = [None], [None]
    for m in range(1, coeffs.M + 1):
        At = kt * coeffs.A[m] / (market.q + alpha + kt)
        Bt = kt * coeffs.B[m] / (market.r + alpha + kt)
        E, F = coeffs.E[m], coeffs.F[m]
        et = [0.0] * (m + 2)
        ft = [0.0] * (m + 2)
        for n in range(m - 1, -1, -1):
            et[n] = -(2 * kt * E[n] + 2 * (n + 1) * P1 * et[n + 1] + s2 * (n + 2) * (n + 1) * et[n + 2]) / (2 * R)
            ft[n] = -(2 * kt * F[n] + 2 * (n + 1) * Q1 * ft[n + 1] + s2 * (n + 2) * (n + 1) * ft[n + 2]) / (2 * R)
        P = ft[0] - et[0] - K * At - K * Bt
        Q = (gam + th) * ft[0] - (gam - th) * et[0] - K * At + ft[1] - et[1]
        out.At.append(At)
        out.Bt.append(Bt)
        out.Et.append(et[:m])
        out.Ft.append(ft[:m])
        out.Et_h.append(((gam + th_t) * P - Q) / (2 * th_t))
        out.Ft_h.append(((gam - th_t) * P - Q) / (2 * th_t))
    return out


def _log_poly(c, L):
    acc = np.zeros_like(L)
    for n in range(len(c) - 1, -1, -1):
        acc = acc * L + c[n]
    return acc


def _evaluate(s, K, upper, lower):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    up = pos & (s > K)
    lo = pos & ~up
    # each branch only on its own side: the unused power can overflow
    for mask, branch in ((up, upper), (lo, lower)):
        y = s[mask] / K
        out[mask] = branch(s[mask], y, np.log(y))
    return float(out) if out.ndim == 0 else out


def mr_vested_cost(coeffs: MrCoefficients, s, m: int | None = None):
    """Vested cost C^(m)(s) from the closed form (vectorised in s)."""
    m = coeffs.M if m is None else m
    pr, K = coeffs.params, coeffs.K
    up_exp, lo_exp = pr.gamma - pr.theta, pr.gamma + pr.theta

    def upper(s, y, L):
        return coeffs.A[m] * s + coeffs.B[m] * K + _log_poly(coeffs.E[m], L) * y**up_exp

    def lower(s, y, L):
        return _log_poly(coeffs.F[m], L) * y**lo_exp

    return _evaluate(s, K, upper, lower)


def mr_unvested_cost(coeffs: MrCoefficients, market, grant, kappa, kappa_tilde, s, m=None):
    """Unvested cost under randomized vesting (vectorised in s).

    ``coeffs`` may already carry tilde coefficients for ``kappa_tilde``;
    otherwise they are computed here.
    """
    if abs(coeffs.params.kappa - kappa) > 1e-15 * kappa:
        raise DomainError("coefficients were built for a different kappa")
    if coeffs.kappa_tilde != kappa_tilde:
        coeffs = mr_unvested_coefficients(coeffs, market, grant, kappa_tilde)
    m = coeffs.M if m is None else m
    pr, K = coeffs.params, coeffs.K
    gam, th, th_t = pr.gamma, pr.theta, coeffs.theta_tilde

    def upper(s, y, L):
        return (
            coeffs.At[m] * s
            + coeffs.Bt[m] * K
            + _log_poly(coeffs.Et[m], L) * y ** (gam - th)
            + coeffs.Et_h[m] * y ** (gam - th_t)
        )

    def lower(s, y, L):
        return _log_poly(coeffs.Ft[m], L) * y ** (gam + th) + coeffs.Ft_h[m] * y ** (gam + th_t)

    return _evaluate(s, K, upper, lower)


def default_kappas(market: MarketParams, grant: GrantSpec):
    """kappa = 1/(T - t_v); kappa_tilde = 1/t_v, or 0 (no vesting stage) when t_v = 0."""
    span = market.T - grant.t_v
    if span <= 0:
        raise DomainError("randomization needs T > t_v")
    return 1.0 / span, (1.0 / grant.t_v if grant.t_v > 0 else 0.0)


def price(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    kappa: float | None = None,
    kappa_tilde: float | None = None,
    unvested: str = "mr",
    grid=None,
) -> float:
    """Grant cost at S0 by maturity randomization.

    ``unvested="mr"`` randomizes the vesting date as well; ``"fft"`` feeds
    the randomized vested slice into the spectral unvested solver instead.
    kappa_tilde = 0 (or t_v = 0) skips the vesting stage.
    """
    k0, kt0 = default_kappas(market, grant)
    kappa = k0 if kappa is None else kappa
    kappa_tilde = kt0 if kappa_tilde is None else kappa_tilde
    coeffs = mr_coefficients(market, grant, policy, kappa)
    if grant.t_v == 0 or kappa_tilde == 0:
        return mr_vested_cost(coeffs, market.S0)
    if unvested == "mr":
        return mr_unvested_cost(coeffs, market, grant, kappa, kappa_tilde, market.S0)
    if unvested == "fft":
        from . import fft

        grid = grid or fft.SpectralGrid()
        slab = np.stack([mr_vested_cost(coeffs, grid.stock(market.K), m) for m in range(1, grant.M + 1)])
        return fft.solve_unvested(slab, market, grant, grid).at(market.S0)
    raise ValueError(f"unknown unvested mode {unvested!r}")


def mr_error_curve(
    market: MarketParams,
    grant: GrantSpec,
    policy: ExercisePolicy,
    parameter: str,
    values,
    kappa: float | None = None,
    grid=None,
):
    """Rows (value, mr_price, fft_price, abs_error) sweeping lambda or beta.

    All other inputs come from ``grant`` and ``policy`` (whose jump sizes
    are kept). Both prices use the vested cost at S0 when t_v = 0.
    """
    from . import fft

    if parameter not in ("lambda", "beta"):
        raise ValueError("parameter must be 'lambda' or 'beta'")
    rows = []
    for v in values:
        if parameter == "lambda":
            pol, g = ExercisePolicy.constant(v, policy.jumps), grant
        else:
            pol, g = policy, grant.replace(beta=v)
        mr = price(market, g, pol, kappa=kappa)
        ref = fft.price(market, g, pol, grid)
        rows.append((float(v), mr, ref, abs(mr - ref)))
    return rows
