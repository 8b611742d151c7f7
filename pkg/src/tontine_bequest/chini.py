"""Variable consumption under power utility via the Chini equation.

The value function is ``h(t) x**gamma`` with ``h`` solving::

    0 = h' + (1-gamma)/gamma * (gamma h)**(gamma/(gamma-1)) + h psi + phi
    phi = (b/gamma) lambda (1-alpha)**gamma
    psi = gamma (r + alpha lambda) + gamma theta**2 / (2 (1-gamma)) - lambda - rho

and the optimal rate is ``c*(t) = (gamma h(t))**(1/(gamma-1))``. Writing
``u = 1/c* = (gamma h)**(1/(1-gamma))`` turns the equation into::

    u' = -1 - psi u / (1-gamma) - b lambda (1-alpha)**gamma u**gamma / (1-gamma)

which stays regular at the terminal time even when ``b = 0`` (``u(T) = 0``).
It is integrated backwards with classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ChiniCrossingError, ConvergenceError
from .market import MarketModel, RetireePreferences
from .quadrature import gauss_legendre_panels


@dataclass(frozen=True)
class ChiniCoefficients:
    mortality: object
    market: MarketModel
    prefs: RetireePreferences
    alpha: float

    def __post_init__(self):
        if not self.prefs.is_power:
            raise ValueError("the Chini equation is for power utility")
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def gamma(self):
        return self.prefs.gamma

    @property
    def psi_constant(self):
        g, mk = self.gamma, self.market
        return g * mk.r + 0.5 * g / (1.0 - g) * mk.sharpe_ratio**2 - self.prefs.rho

    def psi(self, t):
        lam = self.mortality.hazard(t)
        return self.psi_constant + (self.gamma * self.alpha - 1.0) * lam

    def phi(self, t):
        g = self.gamma
        return self.prefs.b / g * self.mortality.hazard(t) * (1.0 - self.alpha) ** g

    def terminal_h(self):
        return self.prefs.b * (1.0 - self.alpha) ** self.gamma / self.gamma

    def u_rhs(self, t, u):
        g = self.gamma
        lam = self.mortality.hazard(t)
        out = -1.0 - self.psi(t) * u / (1.0 - g)
        if self.prefs.b > 0:
            out = out - self.prefs.b * lam * (1.0 - self.alpha) ** g * np.power(u, g) / (1.0 - g)
        return out

    def h_rhs(self, t, h):
        g = self.gamma
        return -(1.0 - g) / g * np.power(g * h, g / (g - 1.0)) - h * self.psi(t) - self.phi(t)


@dataclass(frozen=True)
class ChiniSolution:
    grid: np.ndarray
    h: np.ndarray
    u: np.ndarray
    terminal_horizon: float
    step: float
    gamma: float

    @property
    def c_values(self):
        with np.errstate(divide="ignore"):
            return 1.0 / self.u

    def c_star(self, t):
        """Optimal consumption rate at ``t``, interpolated between grid points."""
        with np.errstate(divide="ignore"):
            return 1.0 / self._u_interp(t)

    def h_at(self, t):
        return np.power(self._u_interp(t), 1.0 - self.gamma) / self.gamma

    def _u_interp(self, t):
        return self._spline(np.asarray(t, dtype=float))

    @property
    def _spline(self):
        spline = self.__dict__.get("_spline_cache")
        if spline is None:
            spline = CubicHermiteSpline(self.grid, self.u, self._du)
            object.__setattr__(self, "_spline_cache", spline)
        return spline


def _rk4_backward(coef: ChiniCoefficients, horizon: float, n_steps: int, u_end: float):
    dt = horizon / n_steps
    t = np.linspace(0.0, horizon, n_steps + 1)
    u = np.empty(n_steps + 1)
    u[-1] = u_end
    f = coef.u_rhs
    # a stage that overshoots below zero yields nan, caught by the check below
    with np.errstate(invalid="ignore", over="ignore"):
        for i in range(n_steps, 0, -1):
            ti, ui = t[i], u[i]
            k1 = f(ti, ui)
            k2 = f(ti - 0.5 * dt, ui - 0.5 * dt * k1)
            k3 = f(ti - 0.5 * dt, ui - 0.5 * dt * k2)
            k4 = f(ti - dt, ui - dt * k3)
            nxt = ui - dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not (nxt > 0 and math.isfinite(nxt)):
                raise ChiniCrossingError(
                    f"gamma*h left the positive region near t={t[i - 1]:.6g}", crossing_time=float(t[i - 1])
                )
            u[i - 1] = nxt
    return t, u


def _h_from_u(u, gamma):
    return np.power(u, 1.0 - gamma) / gamma


def _terminal_u(prefs, alpha):
    g = prefs.gamma
    return (prefs.b * (1.0 - alpha) ** g) ** (1.0 / (1.0 - g))


def _solution(coef, t, u, horizon):
    sol = ChiniSolution(grid=t, h=_h_from_u(u, coef.gamma), u=u, terminal_horizon=horizon,
                        step=horizon / (t.size - 1), gamma=coef.gamma)
    object.__setattr__(sol, "_du", coef.u_rhs(t, u))
    return sol


def rk4_chini(mortality, market: MarketModel, prefs: RetireePreferences, alpha: float,
              horizon: float, n_steps: int) -> ChiniSolution:
    """One backward RK4 pass with ``n_steps`` equal steps and no refinement."""
    coef = ChiniCoefficients(mortality, market, prefs, alpha)
    if not horizon > 0 or n_steps < 1:
        raise ValueError("need horizon > 0 and n_steps >= 1")
    t, u = _rk4_backward(coef, horizon, int(n_steps), _terminal_u(prefs, alpha))
    return _solution(coef, t, u, horizon)


def solve_chini(mortality, market: MarketModel, prefs: RetireePreferences, alpha: float,
                horizon: float = 60.0, step: float = 1.0 / 16, tol: float = 1e-8,
                max_halvings: int = 10) -> ChiniSolution:
    """Integrate the Chini equation backwards from ``h(T) = b (1-alpha)**gamma / gamma``.

    The step is halved until the solution on the coarser grid changes by less
    than ``tol * max(1, sup|h|)`` in sup-norm.

    Raises:
        ChiniCrossingError: ``gamma*h`` stopped being positive.
        ConvergenceError: the refinement did not settle within ``max_halvings``.
    """
    coef = ChiniCoefficients(mortality, market, prefs, alpha)
    if not horizon > 0 or not step > 0:
        raise ValueError("horizon and step must be > 0")
    g = prefs.gamma
    u_end = _terminal_u(prefs, alpha)
    n = max(1, int(round(horizon / step)))
    # an explicit step that is too coarse for the stiff terminal region can
    # also drive u negative; only a crossing that survives refinement is real
    for attempt in range(max_halvings + 1):
        try:
            t, u = _rk4_backward(coef, horizon, n, u_end)
            break
        except ChiniCrossingError:
            if attempt == max_halvings:
                raise
            n *= 2
    h = _h_from_u(u, g)
    for _ in range(max_halvings):
        t2, u2 = _rk4_backward(coef, horizon, 2 * n, u_end)
        h2 = _h_from_u(u2, g)
        change = float(np.max(np.abs(h2[::2] - h)))
        n, t, u, h = 2 * n, t2, u2, h2
        if change < tol * max(1.0, float(np.max(np.abs(h)))):
            break
    else:
        raise ConvergenceError(f"Chini refinement change {change:.3g} above tolerance after {max_halvings} halvings")
    return _solution(coef, t, u, horizon)


def bernoulli_u(mortality, market, prefs, alpha, horizon, times, panels_per_year=4):
    """Closed-form ``u(t) = int_t^T exp(int_t^s psi / (1-gamma)) ds`` for ``b = 0``."""
    coef = ChiniCoefficients(mortality, market, prefs, alpha)
    g = prefs.gamma
    a_lin = coef.psi_constant / (1.0 - g)
    a_haz = (g * alpha - 1.0) / (1.0 - g)
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        if t >= horizon:
            out.append(0.0)
            continue
        panels = max(4, int(math.ceil((horizon - t) * panels_per_year)))
        s, w = gauss_legendre_panels(t, horizon, panels, order=10)
        expo = a_lin * (s - t) + a_haz * (mortality.integrated_hazard(s) - mortality.integrated_hazard(t))
        out.append(float(np.sum(w * np.exp(expo))))
    return np.array(out)


def bernoulli_solution(mortality, market, prefs, alpha, horizon, times):
    """``h(t)`` of the ``b = 0`` equation in closed form."""
    return _h_from_u(bernoulli_u(mortality, market, prefs, alpha, horizon, times), prefs.gamma)


def chini_residual(grid, h, mortality, market, prefs, alpha, window=None) -> float:
    """Sup-norm of the Chini right-hand side at interval midpoints.

    ``h'`` and ``h`` at each midpoint come from fourth-order four-point
    stencils, so a smooth exact solution leaves a residual of order ``step**4``.
    Requires a uniform grid. ``window=(t0, t1)`` restricts the midpoints used.
    """
    coef = ChiniCoefficients(mortality, market, prefs, alpha)
    grid = np.asarray(grid, dtype=float)
    h = np.asarray(h, dtype=float)
    dt = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), dt, rtol=1e-9, atol=0):
        raise ValueError("chini_residual needs a uniform grid")
    hm1, h0, h1, h2 = h[:-3], h[1:-2], h[2:-1], h[3:]
    mids = 0.5 * (grid[1:-2] + grid[2:-1])
    dh = (hm1 - 27.0 * h0 + 27.0 * h1 - h2) / (24.0 * dt)
    hmid = (-hm1 + 9.0 * h0 + 9.0 * h1 - h2) / 16.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        res = dh - coef.h_rhs(mids, hmid)
    if window is not None:
        keep = (mids >= window[0]) & (mids <= window[1])
        res = res[keep]
    return float(np.max(np.abs(res)))


__all__ = [
    "ChiniCoefficients",
    "ChiniSolution",
    "solve_chini",
    "rk4_chini",
    "chini_residual",
    "bernoulli_u",
    "bernoulli_solution",
]
