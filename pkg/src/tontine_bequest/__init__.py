"""Tontine with a bequest account: optimal allocation, consumption and investment.

Modules:
    mortality     Makeham hazard, survival and exponential moments of lifetimes
    market        Black-Scholes market, preferences and the Merton stock fraction
    power_policy  constant policies under power utility and their optimisation
    log_policy    closed-form optimal policy under logarithmic utility
    chini         variable consumption via the Chini equation
    simulator     account dynamics and Monte Carlo expected utility
    cli           command-line entry point
"""

from .errors import (
    ChiniCrossingError,
    ConvergenceError,
    DegenerateMortalityError,
    DivergenceError,
    InfiniteValueError,
    NumericalError,
    QuadratureError,
)
from .market import MarketModel, RetireePreferences, merton_fraction
from .mortality import ConstantHazard, MortalityModel, QuadratureConfig

__version__ = "0.1.0"

__all__ = [
    "MortalityModel",
    "ConstantHazard",
    "QuadratureConfig",
    "MarketModel",
    "RetireePreferences",
    "merton_fraction",
    "NumericalError",
    "DivergenceError",
    "QuadratureError",
    "DegenerateMortalityError",
    "ConvergenceError",
    "ChiniCrossingError",
    "InfiniteValueError",
]
