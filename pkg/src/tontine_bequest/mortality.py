"""Makeham mortality, survival functions and exponential moments.

Time ``t`` is measured in years since the base age (65 by default), so
``force_of_mortality(model, 15)`` is the hazard at age 80.

Two auxiliary lifetimes appear in the optimal-policy formulas:

* under power utility, ``A`` with tail ``P[A > t] = S(t) ** (1 - gamma * alpha)``;
* under log utility, ``A`` with tail ``P[A > t] = S(t) * (1 - log S(t))``.

Their exponential moments are computed by adaptive quadrature on a finite
horizon plus an analytic tail bound that uses the monotonicity of the hazard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMortalityError, DivergenceError
from .quadrature import adaptive_simpson


@dataclass(frozen=True)
class MortalityModel:
    """Makeham's law ``lambda(t) = A + B * C ** (base_age + t)``.

    Defaults are the parameters used throughout the numerical illustrations:
    a 65-year-old with ``A = 2.2e-4``, ``B = 2.7e-6`` and ``C = 1.124``.
    """

    makeham_a: float = 2.2e-4
    makeham_b: float = 2.7e-6
    makeham_c: float = 1.124
    base_age: float = 65.0

    def __post_init__(self):
        if not self.makeham_a >= 0:
            raise ValueError(f"makeham_a must be >= 0, got {self.makeham_a}")
        if not self.makeham_b > 0:
            raise ValueError(f"makeham_b must be > 0, got {self.makeham_b}")
        if not self.makeham_c > 1:
            raise ValueError(f"makeham_c must be > 1, got {self.makeham_c}")
        if not self.base_age > 0:
            raise ValueError(f"base_age must be > 0, got {self.base_age}")

    @property
    def _log_c(self) -> float:
        return math.log(self.makeham_c)

    def hazard(self, t):
        return self.makeham_a + self.makeham_b * np.power(self.makeham_c, self.base_age + t)

    def integrated_hazard(self, t):
        log_c = self._log_c
        scale = self.makeham_b * self.makeham_c**self.base_age / log_c
        return self.makeham_a * t + scale * np.expm1(log_c * np.asarray(t, dtype=float))

    def hazard_increment(self, t0, u):
        """``H(t0 + u) - H(t0)`` without cancellation for small ``u``."""
        log_c = self._log_c
        scale = self.makeham_b * np.power(self.makeham_c, self.base_age + t0) / log_c
        return self.makeham_a * u + scale * np.expm1(log_c * np.asarray(u, dtype=float))

    @property
    def hazard_limit(self) -> float:
        return math.inf


@dataclass(frozen=True)
class ConstantHazard:
    """Exponential lifetime with a constant force of mortality.

    Only used for degenerate checks: moment finiteness and the limit of the
    log-utility consumption rate both have simple closed forms here.
    """

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")

    def hazard(self, t):
        return self.rate + 0.0 * np.asarray(t, dtype=float)

    def integrated_hazard(self, t):
        return self.rate * np.asarray(t, dtype=float)

    def hazard_increment(self, t0, u):
        return self.rate * np.asarray(u, dtype=float)

    @property
    def hazard_limit(self) -> float:
        return self.rate


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and horizons for the improper integrals.

    ``truncation_horizon`` is where the adaptive integration stops first; if
    the tail bound there is above tolerance the range is doubled, up to
    ``max_horizon``, before a :class:`DivergenceError` is raised.
    """

    absolute_tolerance: float = 1e-10
    relative_tolerance: float = 1e-12
    truncation_horizon: float = 60.0
    max_horizon: float = 4000.0
    max_subdivisions: int = 200_000

    def __post_init__(self):
        if not self.absolute_tolerance > 0:
            raise ValueError("absolute_tolerance must be > 0")
        if self.relative_tolerance < 0:
            raise ValueError("relative_tolerance must be >= 0")
        if not 0 < self.truncation_horizon <= self.max_horizon:
            raise ValueError("need 0 < truncation_horizon <= max_horizon")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"time must be non-negative, got {t}")


def force_of_mortality(model, t):
    """Hazard rate per annum at ``t`` years past the base age."""
    _check_time(t)
    return model.hazard(t)


def integrated_hazard(model, t):
    """Closed-form cumulative hazard ``int_0^t lambda(s) ds``."""
    _check_time(t)
    return model.integrated_hazard(t)


def survival(model, t):
    """Probability of surviving ``t`` more years from the base age."""
    _check_time(t)
    return np.exp(-model.integrated_hazard(t))


def _tail_integral(model, p, t0, exponent, density, quad, scale=1.0):
    """``int_0^inf e^{pu} w(u) exp(-exponent * (H(t0+u) - H(t0))) du``.

    ``w`` is ``exponent * lambda(t0 + u)`` when ``density`` is true (the
    integral is then an exponential moment) and 1 otherwise (a discounted
    tail integral). ``scale`` multiplies the integrand; it only matters for
    the tolerance bookkeeping.
    """
    tol = quad.absolute_tolerance

    def integrand(u):
        log_s = -exponent * model.hazard_increment(t0, u)
        core = np.exp(p * u + log_s)
        if density:
            core = core * exponent * model.hazard(t0 + u)
        return scale * core

    def tail_bound(u_end):
        # beyond u_end the exponent p*u - e*dH has slope <= p - e*lambda(t0+u_end)
        lam_end = float(model.hazard(t0 + u_end))
        rate = exponent * lam_end - p
        if rate <= 0:
            return math.inf
        g = p * u_end - exponent * float(model.hazard_increment(t0, u_end))
        bound = math.exp(g) / rate
        if density:
            bound *= exponent * lam_end
        return abs(scale) * bound

    # a non-decaying integrand even at the largest horizon cannot converge
    if exponent * float(model.hazard(t0 + quad.max_horizon)) - p <= 0:
        raise DivergenceError(
            f"exponential moment with p={p} diverges: integrand does not decay",
            horizon=quad.max_horizon, tail_bound=math.inf,
        )
    horizon = quad.truncation_horizon
    total, _ = adaptive_simpson(
        integrand, 0.0, horizon, tol=tol, rel_tol=quad.relative_tolerance,
        max_subdivisions=quad.max_subdivisions,
    )
    if float(model.hazard(t0 + horizon)) == model.hazard_limit:
        # hazard already constant: the exponential tail is exact, not a bound
        return total + math.copysign(tail_bound(horizon), scale)
    bound = tail_bound(horizon)
    while bound > max(tol, quad.relative_tolerance * abs(total)):
        if horizon >= quad.max_horizon:
            raise DivergenceError(
                f"tail of exponential moment with p={p} not below tolerance "
                f"by horizon {horizon} (bound {bound:.3g})",
                horizon=horizon,
                tail_bound=bound,
            )
        new_horizon = min(2.0 * horizon, quad.max_horizon)
        piece, _ = adaptive_simpson(
            integrand, horizon, new_horizon, tol=tol, rel_tol=quad.relative_tolerance,
            max_subdivisions=quad.max_subdivisions,
        )
        total += piece
        horizon = new_horizon
        bound = tail_bound(horizon)
    return total


def mgf_tau(model, p: float, t: float = 0.0, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``E[exp(p (tau - t)) | tau > t]`` for the remaining lifetime at ``t``."""
    _check_time(t)
    return _tail_integral(model, p, t, 1.0, True, quad)


def _power_exponent(gamma: float, alpha: float) -> float:
    if gamma >= 1 or gamma == 0:
        raise ValueError(f"power utility needs gamma < 1 and gamma != 0, got {gamma}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return 1.0 - gamma * alpha


def mgf_A_power(model, p: float, gamma: float, alpha: float,
                quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``E[exp(p A)]`` where ``P[A > t] = S(t) ** (1 - gamma * alpha)``."""
    return _tail_integral(model, p, 0.0, _power_exponent(gamma, alpha), True, quad)


def discounted_tail_A_power(model, p: float, gamma: float, alpha: float,
                            quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``int_0^inf exp(p t) P[A > t] dt`` for the power-utility ``A``."""
    return _tail_integral(model, p, 0.0, _power_exponent(gamma, alpha), False, quad)


def expected_A_power(model, gamma: float, alpha: float,
                     quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``E[A] = int_0^inf S(t) ** (1 - gamma * alpha) dt``."""
    return discounted_tail_A_power(model, 0.0, gamma, alpha, quad)


def mgf_A_log(model, p: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``E[exp(p A)]`` where ``P[A > t] = S(t) (1 - log S(t))``.

    Uses integration by parts, ``M_A(p) = 1 + p int_0^inf e^{pt} P[A > t] dt``.
    """
    if p > 0:
        raise ValueError(f"mgf_A_log requires p <= 0, got {p}")
    if p == 0:
        return 1.0
    tol = quad.absolute_tolerance

    def integrand(t):
        big_h = model.integrated_hazard(t)
        return np.exp(p * t - big_h) * (1.0 + big_h)

    def tail_bound(t_end):
        lam = float(model.hazard(t_end))
        big_h = float(model.integrated_hazard(t_end))
        rate = lam * big_h / (1.0 + big_h) - p
        return abs(p) * math.exp(p * t_end - big_h) * (1.0 + big_h) / rate

    horizon = quad.truncation_horizon
    area, _ = adaptive_simpson(integrand, 0.0, horizon, tol=tol / abs(p),
                               max_subdivisions=quad.max_subdivisions)
    while tail_bound(horizon) > tol:
        if horizon >= quad.max_horizon:
            raise DivergenceError(f"log-utility moment tail not bounded by {horizon}",
                                  horizon=horizon, tail_bound=tail_bound(horizon))
        new_horizon = min(2.0 * horizon, quad.max_horizon)
        piece, _ = adaptive_simpson(integrand, horizon, new_horizon, tol=tol / abs(p),
                                    max_subdivisions=quad.max_subdivisions)
        area += piece
        horizon = new_horizon
    return 1.0 + p * area


def kappa(model, p: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Moment ratio ``M_A(p) / (M_tau(p, 0) - M_A(p))`` for the log-utility ``A``."""
    m_a = mgf_A_log(model, p, quad)
    m_tau = mgf_tau(model, p, 0.0, quad)
    denom = m_tau - m_a
    if denom <= 10.0 * quad.absolute_tolerance:
        raise DegenerateMortalityError(
            f"M_tau({p}) - M_A({p}) = {denom:.3g} is not positive; kappa undefined"
        )
    return m_a / denom


def inverse_integrated_hazard(model, target, tol: float = 1e-10):
    """Solve ``H(t) = target`` for ``t >= 0`` elementwise.

    Bisection on a doubling bracket, then one secant step inside the final
    bracket. ``H`` is strictly increasing, so bisection always converges.
    """
    y = np.atleast_1d(np.asarray(target, dtype=float))
    if np.any(y < 0):
        raise ValueError("cumulative hazard target must be >= 0")
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    while True:
        short = model.integrated_hazard(hi) < y
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
        if np.any(hi > 1e6):
            raise ValueError("cumulative hazard target not reachable")
    # each element stops on its own bracket width, so results do not depend
    # on which other targets share the call
    open_ = hi - lo > tol
    while np.any(open_):
        mid = 0.5 * (lo + hi)
        below = model.integrated_hazard(mid) < y
        lo = np.where(open_ & below, mid, lo)
        hi = np.where(open_ & ~below, mid, hi)
        open_ = hi - lo > tol
    h_lo = model.integrated_hazard(lo)
    h_hi = model.integrated_hazard(hi)
    span = h_hi - h_lo
    safe = span > 0
    frac = np.where(safe, (y - h_lo) / np.where(safe, span, 1.0), 0.0)
    t = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
    t = np.where(y == 0, 0.0, t)
    return t if np.ndim(target) else float(t[0])


def sample_tau(model, rng: np.random.Generator, size=None):
    """Draw death times by inversion of the survival function.

    ``u`` is taken from ``(0, 1]`` so the boundary ``u = 1`` maps to ``t = 0``.
    """
    u = 1.0 - rng.random(size)
    return inverse_integrated_hazard(model, -np.log(u))


def life_expectancy(model, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Curtate-free expected remaining lifetime ``int_0^inf S(t) dt``."""
    return _tail_integral(model, 0.0, 0.0, 1.0, False, quad)
