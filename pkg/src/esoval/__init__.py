"""Valuation of multi-unit employee stock option grants with random exercise."""

from .analysis import ImpliedMaturityResult, implied_maturity, reproduce_table, sweep
from .exceptions import ConfigurationError, DomainError, EsoError, RangeError, ValidationError
from .model import (
    AffineIntensity,
    ConstantIntensity,
    CostSurface,
    ExercisePolicy,
    GrantSpec,
    JumpSizeDistribution,
    MarketParams,
    PiecewiseIntensity,
    TimeIntensity,
    bs_call,
    call_payoff,
    expected_jump_size,
)
from .pricing import PriceResult, price
from .simulation import ExercisePath, mc_price, simulate_path, weighted_avg_exercise_time

__all__ = [
    "AffineIntensity",
    "ConfigurationError",
    "ConstantIntensity",
    "CostSurface",
    "DomainError",
    "EsoError",
    "ExercisePath",
    "ExercisePolicy",
    "GrantSpec",
    "ImpliedMaturityResult",
    "JumpSizeDistribution",
    "MarketParams",
    "PiecewiseIntensity",
    "PriceResult",
    "RangeError",
    "TimeIntensity",
    "ValidationError",
    "bs_call",
    "call_payoff",
    "expected_jump_size",
    "implied_maturity",
    "mc_price",
    "price",
    "reproduce_table",
    "simulate_path",
    "sweep",
    "weighted_avg_exercise_time",
]

__version__ = "0.1.0"
