"""How the grant cost reacts to exercise intensity, stock price and grant size.

Three sweeps on a five-option vested grant (beta = 0.1):

1. cost against lambda for maturities 5, 8 and 10. Faster exercise shortens
   the effective life of every option, so cost falls, and the maturities
   stop mattering once options rarely survive to expiry.
2. cost against S0 for lambda in {0, 1, 5}, next to the intrinsic value.
3. per-unit cost against grant size M (t_v = 1, alpha = 0.1, beta = 0.5).
   Larger grants take longer to unwind, so each option lives longer.
"""

import argparse

import numpy as np

from esoval.analysis import BASE_MARKET, UNIFORM, sweep
from esoval.model import ExercisePolicy, GrantSpec

from _plot import maybe_plot


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--plot", action="store_true", help="write PNGs next to this script")
    args = ap.parse_args()
    pol = ExercisePolicy.constant(0.0, UNIFORM)

    lams = np.linspace(0, 5, 11)
    print("cost vs lambda")
    series = {}
    for T in (5, 8, 10):
        rows = sweep("lambda", lams, BASE_MARKET.replace(T=T), GrantSpec(5, 0, 0, 0.1), pol)
        series[f"T={T}"] = (lams, [r["cost"] for r in rows])
        print(f"  T={T:2d}: " + " ".join(f"{r['cost']:6.3f}" for r in rows))
    if args.plot:
        maybe_plot("cost_vs_lambda.png", series, "lambda", "grant cost")

    s0 = np.linspace(6, 16, 11)
    print("\ncost vs S0 (intrinsic value 5*(S0-K)+ in last line)")
    for lam in (0.0, 1.0, 5.0):
        rows = sweep("stock", s0, BASE_MARKET, GrantSpec(5, 0, 0, 0.1), ExercisePolicy.constant(lam, UNIFORM))
        print(f"  lambda={lam:3.1f}: " + " ".join(f"{r['cost']:6.2f}" for r in rows))
    print("  payoff    : " + " ".join(f"{5 * max(s - 10, 0):6.2f}" for s in s0))

    print("\nper-unit cost vs M")
    grant = GrantSpec(1, 1, 0.1, 0.5)
    for lam in (0.5, 1.0):
        rows = sweep("grant", range(1, 21), BASE_MARKET, grant, ExercisePolicy.constant(lam, UNIFORM))
        print(f"  lambda={lam}: " + " ".join(f"{r['per_unit_cost']:.3f}" for r in rows[::3]) + "  (M=1,4,...,19)")


if __name__ == "__main__":
    main()
