"""Distribution of the quantity-weighted average exercise time.

Twenty vested options, ten-year life. Low intensities leave a spike at
maturity (options that were never exercised); raising either the exercise
intensity or the departure rate pulls mass towards early dates.
"""

import sys

import numpy as np

from esoval.analysis import BASE_MARKET, UNIFORM
from esoval.model import ExercisePolicy, GrantSpec
from esoval.simulation import exercise_times, histogram_rows

PANELS = {"a": (0.3, 0.0), "b": (0.3, 0.1), "c": (0.3, 0.3), "d": (0.5, 0.1)}


def sparkline(counts):
    bars = " .:-=+*#%@"
    top = max(counts) or 1
    return "".join(bars[min(9, int(9 * c / top + 0.5))] for c in counts)


for key, (lam, beta) in PANELS.items():
    taus = exercise_times(BASE_MARKET, GrantSpec(20, 0, 0, beta), ExercisePolicy.constant(lam, UNIFORM),
                          10_000, seed=7, workers=4)
    counts = [c for _, _, c in histogram_rows(taus, 40, (0, 10))]
    se = taus.std(ddof=1) / np.sqrt(taus.size)
    print(f"({key}) lambda={lam} beta={beta}: mean {taus.mean():.2f} ± {se:.2f}  |{sparkline(counts)}|",
          file=sys.stdout)
