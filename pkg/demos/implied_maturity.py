"""Turn a grant cost into the Black-Scholes maturity it corresponds to.

The per-unit cost of a grant is matched to a plain call: the maturity that
reproduces it summarizes how long the employee effectively holds each
option.
"""

import numpy as np

from esoval.analysis import BASE_MARKET, UNIFORM, implied_maturity, sweep
from esoval.model import ExercisePolicy, GrantSpec

lams = np.linspace(0.5, 5, 10)
print("implied maturity vs lambda (M=5, beta=0.1)")
print("lambda " + " ".join(f"{v:6.2f}" for v in lams))
for T in (5, 8, 10):
    rows = sweep("lambda", lams, BASE_MARKET.replace(T=T), GrantSpec(5, 0, 0, 0.1),
                 ExercisePolicy.constant(0, UNIFORM), implied=True)
    print(f"T={T:<4d} " + " ".join(f"{r['implied_maturity']:6.2f}" for r in rows))

print("\nimplied maturity vs M (beta=0.5)")
for lam in (0.5, 1.0):
    rows = sweep("grant", (1, 5, 10, 20), BASE_MARKET, GrantSpec(1, 0, 0, 0.5),
                 ExercisePolicy.constant(lam, UNIFORM), implied=True)
    print(f"lambda={lam}: " + ", ".join(f"M={int(r['sweep_value'])}: {r['implied_maturity']:.2f}y" for r in rows))

res = implied_maturity(1.5, BASE_MARKET)
print(f"\na per-unit cost of 1.50 corresponds to {res.T_tilde:.3f} years (residual {res.residual:.1e})")
