"""Recompute both benchmark tables with FFT, FDM and (optionally) Monte Carlo.

Each row lists the computed value next to its reference value. The vested
columns (t_v = 0) use only the vested solver; the other columns add the
vesting stage with pre-vesting forfeiture at rate alpha.

    python3 demos/reproduce_tables.py            # FFT + FDM
    python3 demos/reproduce_tables.py --mc       # also MC on the spot-check cells
"""

import argparse
import time

from esoval.analysis import TOLERANCES, reproduce_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mc", action="store_true")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    methods = ("fft", "fdm", "mc") if args.mc else ("fft", "fdm")

    for tid in (1, 2):
        t0 = time.perf_counter()
        rep = reproduce_table(tid, methods, workers=args.workers)
        print(f"\nTable {tid}  (tolerance {TOLERANCES[tid]}, {time.perf_counter() - t0:.1f}s)")
        print(f"{'cell':44s} {'fdm':>9s} {'printed':>9s} {'fft':>9s} {'printed':>9s} {'mc':>14s}  ok")
        for r in rep.records():
            mc = f"{r['mc']:.4f}±{r['mc_stderr']:.4f}" if r.get("mc") is not None else ""
            print(f"{r['cell']:44s} {r['fdm']:9.4f} {r['fdm_printed']:9.4f} "
                  f"{r['fft']:9.4f} {r['fft_printed']:9.4f} {mc:>14s}  {'y' if r['pass'] else 'N'}")
        print("all checks passed" if rep.passed else "SOME CHECKS FAILED")


if __name__ == "__main__":
    main()
