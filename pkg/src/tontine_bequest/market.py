"""Black-Scholes market, retiree preferences and the Merton stock fraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POWER = "power"
LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class MarketModel:
    """Risk-free rate ``r``, stock drift ``mu`` and volatility ``sigma`` (per annum)."""

    r: float = 0.05
    mu: float = 0.085
    sigma: float = 0.2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.mu > self.r:
            raise ValueError(f"need mu > r, got mu={self.mu}, r={self.r}")

    @property
    def sharpe_ratio(self) -> float:
        return (self.mu - self.r) / self.sigma


@dataclass(frozen=True)
class RetireePreferences:
    """Utility family, bequest strength ``b``, time preference ``rho``, savings ``x0``.

    ``utility`` is ``"power"`` (with ``gamma < 1``, ``gamma != 0``, utility
    ``x**gamma / gamma``) or ``"logarithmic"``. Prefer the :meth:`power`,
    :meth:`logarithmic` and :meth:`from_crra` constructors.
    """

    utility: str = POWER
    gamma: float | None = -3.0
    b: float = 1.0
    rho: float = 0.05
    x0: float = 1.0

    def __post_init__(self):
        if self.utility == POWER:
            if self.gamma is None or not self.gamma < 1:
                raise ValueError(f"power utility needs gamma < 1, got {self.gamma}")
            if self.gamma == 0:
                raise ValueError("gamma = 0 is the logarithmic case; use RetireePreferences.logarithmic")
        elif self.utility == LOGARITHMIC:
            if self.gamma is not None:
                raise ValueError("logarithmic utility takes no gamma")
        else:
            raise ValueError(f"unknown utility family {self.utility!r}")
        if not self.b >= 0:
            raise ValueError(f"bequest strength b must be >= 0, got {self.b}")
        if not self.rho > 0:
            raise ValueError(f"time preference rho must be > 0, got {self.rho}")
        if not self.x0 > 0:
            raise ValueError(f"initial savings x0 must be > 0, got {self.x0}")

    @classmethod
    def power(cls, gamma: float, b: float = 1.0, rho: float = 0.05, x0: float = 1.0):
        return cls(POWER, gamma, b, rho, x0)

    @classmethod
    def logarithmic(cls, b: float = 1.0, rho: float = 0.05, x0: float = 1.0):
        return cls(LOGARITHMIC, None, b, rho, x0)

    @classmethod
    def from_crra(cls, crra: float, b: float = 1.0, rho: float = 0.05, x0: float = 1.0):
        """Build from relative risk aversion ``1 - gamma``; ``crra == 1`` is logarithmic."""
        if not crra > 0:
            raise ValueError(f"relative risk aversion must be > 0, got {crra}")
        if crra == 1:
            return cls.logarithmic(b, rho, x0)
        return cls.power(1.0 - crra, b, rho, x0)

    @property
    def is_power(self) -> bool:
        return self.utility == POWER

    @property
    def risk_aversion(self) -> float:
        return 1.0 - self.gamma if self.is_power else 1.0

    def utility_of(self, x):
        """``U(x)``; works elementwise on numpy arrays."""
        if self.is_power:
            return np.power(x, self.gamma) / self.gamma
        return np.log(x)


def merton_fraction(market: MarketModel, prefs: RetireePreferences, cap: bool = False) -> float:
    """Optimal constant fraction of savings held in the stock.

    ``(mu - r) / ((1 - gamma) sigma**2)`` for power utility and
    ``(mu - r) / sigma**2`` for log utility. Values above one mean borrowing
    at the risk-free rate; with ``cap=True`` the reported fraction is limited
    to 1 (under log utility the optimal consumption and tontine allocation
    do not depend on this cap).
    """
    omega = market.sharpe_ratio / (prefs.risk_aversion * market.sigma)
    if cap:
        omega = min(omega, 1.0)
    return omega


def portfolio_growth(market: MarketModel, omega: float) -> float:
    """Log-growth of a constant-mix portfolio, ``r + (mu - r) w - sigma**2 w**2 / 2``."""
    return market.r + (market.mu - market.r) * omega - 0.5 * (market.sigma * omega) ** 2


def certainty_growth(market: MarketModel, prefs: RetireePreferences) -> float:
    """``r + theta**2 / (2 (1 - gamma))``: the maximised portfolio term in ``E[X**gamma]``."""
    return market.r + market.sharpe_ratio**2 / (2.0 * prefs.risk_aversion)


__all__ = [
    "MarketModel",
    "RetireePreferences",
    "merton_fraction",
    "portfolio_growth",
    "certainty_growth",
    "POWER",
    "LOGARITHMIC",
]
