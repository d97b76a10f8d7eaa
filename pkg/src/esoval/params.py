"""Flat JSON parameter files.

Example::

    {
      "S0": 10, "K": 10, "r": 0.05, "q": 0.015, "sigma": 0.2, "T": 10,
      "M": 5, "t_v": 2, "alpha": 0.1, "beta": 0.0,
      "intensity.kind": "constant", "intensity.lambda": 1.0,
      "jump.kind": "uniform"
    }

``intensity.kind`` is one of ``constant`` (``intensity.lambda``),
``piecewise`` (``intensity.times`` breakpoints and ``intensity.values``,
one more value than breakpoints) or ``affine`` (``intensity.A``,
``intensity.B``, optional ``intensity.x_bound``). ``jump.kind`` is
``unit``, ``uniform`` or ``custom`` with ``jump.table`` a list of rows,
row m-1 holding p(m, 1..m).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ValidationError
from .model import (
    AffineIntensity,
    ConstantIntensity,
    ExercisePolicy,
    GrantSpec,
    JumpSizeDistribution,
    MarketParams,
    PiecewiseIntensity,
)

MARKET_KEYS = ("S0", "K", "r", "q", "sigma", "T")
GRANT_KEYS = ("M", "t_v", "alpha", "beta")
GRANT_DEFAULTS = {"t_v": 0.0, "alpha": 0.0, "beta": 0.0}


@dataclass(frozen=True)
class ModelInputs:
    market: MarketParams
    grant: GrantSpec
    policy: ExercisePolicy


def _intensity(d: dict):
    kind = d.get("intensity.kind", "constant")
    if kind == "constant":
        return ConstantIntensity(float(d.get("intensity.lambda", 0.0)))
    if kind == "piecewise":
        return PiecewiseIntensity(tuple(d["intensity.times"]), tuple(d["intensity.values"]))
    if kind == "affine":
        kw = {"x_bound": float(d["intensity.x_bound"])} if "intensity.x_bound" in d else {}
        return AffineIntensity(float(d["intensity.A"]), float(d["intensity.B"]), **kw)
    raise ValidationError(f"unknown intensity.kind {kind!r}")


def _jumps(d: dict):
    kind = d.get("jump.kind", "unit")
    if kind == "unit":
        return JumpSizeDistribution.unit()
    if kind == "uniform":
        return JumpSizeDistribution.uniform()
    if kind == "custom":
        return JumpSizeDistribution.custom(d["jump.table"])
    raise ValidationError(f"unknown jump.kind {kind!r}")


def from_dict(d: dict) -> ModelInputs:
    missing = [k for k in MARKET_KEYS + ("M",) if k not in d]
    if missing:
        raise ValidationError(f"parameter file is missing {', '.join(missing)}")
    known = set(MARKET_KEYS + GRANT_KEYS) | {
        "intensity.kind", "intensity.lambda", "intensity.times", "intensity.values",
        "intensity.A", "intensity.B", "intensity.x_bound", "jump.kind", "jump.table",
    }
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValidationError(f"unknown parameter keys: {', '.join(unknown)}")
    market = MarketParams(**{k: float(d[k]) for k in MARKET_KEYS})
    grant = GrantSpec(
        M=int(d["M"]), **{k: float(d.get(k, GRANT_DEFAULTS[k])) for k in GRANT_KEYS[1:]}
    )
    grant.check_against(market)
    return ModelInputs(market, grant, ExercisePolicy(_intensity(d), _jumps(d)))


def to_dict(inputs: ModelInputs) -> dict:
    m, g, p = inputs.market, inputs.grant, inputs.policy
    d = {k: getattr(m, k) for k in MARKET_KEYS}
    d.update({k: getattr(g, k) for k in GRANT_KEYS})
    it = p.intensity
    if isinstance(it, ConstantIntensity):
        d.update({"intensity.kind": "constant", "intensity.lambda": it.lam})
    elif isinstance(it, PiecewiseIntensity):
        d.update({"intensity.kind": "piecewise", "intensity.times": list(it.times),
                  "intensity.values": list(it.values)})
    elif isinstance(it, AffineIntensity) and it.is_constant_in_time:
        d.update({"intensity.kind": "affine", "intensity.A": float(it.A_spec),
                  "intensity.B": float(it.B_spec), "intensity.x_bound": it.x_bound})
    else:
        raise ValidationError(f"{type(it).__name__} with callables cannot be serialised")
    d.update(p.jumps.to_dict())
    return d


def load(path) -> ModelInputs:
    with open(Path(path), encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def dump(inputs: ModelInputs, path) -> None:
    Path(path).write_text(json.dumps(to_dict(inputs), indent=2) + "\n", encoding="utf-8")
