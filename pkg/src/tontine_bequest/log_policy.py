"""Closed-form optimal controls for a logarithmic-utility retiree."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import mortality as mort
from .market import MarketModel, RetireePreferences, merton_fraction
from .mortality import DEFAULT_QUAD, QuadratureConfig
from .quadrature import gauss_legendre_panels


class _Unbounded:
    """Sentinel for the ``1/b`` bound when ``b = 0``; compares above every float."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __gt__(self, other):
        return not isinstance(other, _Unbounded)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Unbounded)

    def __float__(self):
        return math.inf


UNBOUNDED = _Unbounded()


def _require_log(prefs: RetireePreferences):
    if prefs.is_power:
        raise ValueError("logarithmic preferences required")


def inverse_b(prefs: RetireePreferences):
    """``1/b`` with the unbounded convention at ``b = 0``."""
    return UNBOUNDED if prefs.b == 0 else 1.0 / prefs.b


def log_consumption(mortality, prefs: RetireePreferences, t: float,
                    quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Optimal consumption rate ``rho / (1 - (1 - b rho) M_tau(-rho, t))`` at time ``t``."""
    _require_log(prefs)
    rho, b = prefs.rho, prefs.b
    if b * rho == 1.0:
        return rho
    m = mort.mgf_tau(mortality, -rho, t, quad)
    denom = 1.0 - (1.0 - b * rho) * m
    assert denom > 0, "consumption denominator must be positive"
    return rho / denom


def log_tontine_fraction(mortality, prefs: RetireePreferences,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Optimal constant share of savings in the tontine account.

    ``(1 - b rho) / (1 + b rho kappa(-rho))``, which is 1 without a bequest
    motive and 0 once ``b rho >= 1``.
    """
    _require_log(prefs)
    b, rho = prefs.b, prefs.rho
    if b == 0:
        return 1.0
    if b * rho >= 1.0:
        return 0.0
    k = mort.kappa(mortality, -rho, quad)
    return (1.0 - b * rho) / (1.0 + b * rho * k)


def g_alpha(mortality, prefs: RetireePreferences, alpha,
            quad: QuadratureConfig = DEFAULT_QUAD):
    """The alpha-dependent part of the log-utility objective (concave for ``b > 0``)."""
    _require_log(prefs)
    a = np.asarray(alpha, dtype=float)
    if np.any(a >= 1) or np.any(a < 0):
        raise ValueError("g_alpha needs 0 <= alpha < 1")
    rho, b = prefs.rho, prefs.b
    m_tau = mort.mgf_tau(mortality, -rho, 0.0, quad)
    m_a = mort.mgf_A_log(mortality, -rho, quad)
    out = b * np.log1p(-a) * m_tau + a * ((m_tau - m_a) / rho + b * m_a)
    return float(out) if np.ndim(alpha) == 0 else out


def log_consumption_limit(mortality, prefs: RetireePreferences):
    """Long-run limit of the optimal consumption rate.

    ``(rho + l) / (1 + b l)`` for a finite limiting hazard ``l``; for an
    unbounded hazard this becomes ``1/b``, or :data:`UNBOUNDED` when ``b = 0``.
    """
    _require_log(prefs)
    rho, b = prefs.rho, prefs.b
    lam_inf = mortality.hazard_limit
    if math.isinf(lam_inf):
        return inverse_b(prefs)
    return (rho + lam_inf) / (1.0 + b * lam_inf)


def consumption_bounds(prefs: RetireePreferences):
    """``(min(rho, 1/b), max(rho, 1/b))``, the band that always contains ``c*(t)``."""
    inv_b = inverse_b(prefs)
    if inv_b is UNBOUNDED:
        return prefs.rho, UNBOUNDED
    return min(prefs.rho, inv_b), max(prefs.rho, inv_b)


class ConsumptionSchedule:
    """Optimal ``c*(t)`` tabulated on a regular grid, with monotone cubic interpolation.

    Times beyond the table fall back to direct evaluation.
    """

    def __init__(self, mortality, prefs: RetireePreferences, horizon: float = 70.0,
                 step: float = 0.1, quad: QuadratureConfig = DEFAULT_QUAD):
        _require_log(prefs)
        if not step > 0 or not horizon > step:
            raise ValueError("need 0 < step < horizon")
        self.mortality, self.prefs, self.quad = mortality, prefs, quad
        n = int(round(horizon / step))
        self.grid = np.linspace(0.0, n * step, n + 1)
        self.values = self._tabulate()
        self._interp = PchipInterpolator(self.grid, self.values, extrapolate=False)

    def _tabulate(self):
        rho, b = self.prefs.rho, self.prefs.b
        if b * rho == 1.0:
            return np.full(self.grid.size, rho)
        m = self.mortality
        grid = self.grid
        # J(t) = int_t^inf e^{-rho s} lambda(s) S(s) ds by cells from the far end
        nodes, weights = gauss_legendre_panels(grid[0], grid[-1], grid.size - 1, order=8)
        f = weights * np.exp(-rho * nodes - m.integrated_hazard(nodes)) * m.hazard(nodes)
        per_cell = f.reshape(grid.size - 1, -1).sum(axis=1)
        end = float(grid[-1])
        tail = math.exp(-rho * end - float(m.integrated_hazard(end))) * mort.mgf_tau(m, -rho, end, self.quad)
        j = np.concatenate([np.cumsum(per_cell[::-1])[::-1], [0.0]]) + tail
        m_tau = j * np.exp(rho * grid + m.integrated_hazard(grid))
        return rho / (1.0 - (1.0 - b * rho) * m_tau)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.asarray(self._interp(t_arr), dtype=float)
        beyond = t_arr > self.grid[-1]
        if np.any(beyond):
            out = np.array(out, ndmin=1)
            flat_t = np.atleast_1d(t_arr)
            for i in np.flatnonzero(np.atleast_1d(beyond)):
                out[i] = log_consumption(self.mortality, self.prefs, float(flat_t[i]), self.quad)
            out = out.reshape(t_arr.shape)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogPolicy:
    omega_star: float
    alpha_star: float
    schedule: ConsumptionSchedule

    def c_star(self, t):
        return self.schedule(t)


def log_policy(mortality, market: MarketModel, prefs: RetireePreferences,
               horizon: float = 70.0, step: float = 0.1,
               quad: QuadratureConfig = DEFAULT_QUAD) -> LogPolicy:
    """Assemble the full optimal log-utility policy."""
    _require_log(prefs)
    return LogPolicy(
        omega_star=merton_fraction(market, prefs),
        alpha_star=log_tontine_fraction(mortality, prefs, quad),
        schedule=ConsumptionSchedule(mortality, prefs, horizon, step, quad),
    )


__all__ = [
    "UNBOUNDED",
    "LogPolicy",
    "ConsumptionSchedule",
    "log_policy",
    "log_consumption",
    "log_tontine_fraction",
    "g_alpha",
    "log_consumption_limit",
    "consumption_bounds",
    "inverse_b",
]
