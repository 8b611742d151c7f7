"""Constant tontine fraction and constant consumption rate under power utility.

With the Merton stock fraction held throughout, the expected discounted
utility of a policy ``(alpha, c)`` reduces to one-dimensional integrals
against the auxiliary lifetime ``A`` with ``P[A > t] = S(t)**(1 - gamma*alpha)``::

    x0**gamma / gamma * [ c**gamma * int_0^T e^{-kt} P[A>t] dt
                          + b (1-alpha)**gamma / (1 - gamma*alpha) * int_0^T e^{-kt} dP[A<=t] ]

For the full horizon the two integrals are ``(1 - M_A(-k)) / k`` and
``M_A(-k)``, or ``E[A]`` and 1 when ``k = 0``. The optimizer seeds itself on a
vectorised grid and then polishes with a bounded Nelder-Mead search.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize as sp_optimize

from . import mortality as mort
from .errors import DivergenceError, InfiniteValueError, NumericalError
from .market import MarketModel, RetireePreferences
from .mortality import DEFAULT_QUAD, MortalityModel, QuadratureConfig
from .quadrature import adaptive_simpson, gauss_legendre_panels

log = logging.getLogger(__name__)

K_ZERO_THRESHOLD = 1e-12
_K_SMALL = 1e-2


class Finiteness(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    DEGENERATE_ZERO = "degenerate_zero"


@dataclass(frozen=True)
class PowerValueInputs:
    mortality: MortalityModel
    market: MarketModel
    prefs: RetireePreferences
    c: float
    alpha: float
    horizon: float | None = None

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError(f"consumption rate must be >= 0, got {self.c}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    @property
    def is_degenerate(self) -> bool:
        p = self.prefs
        return p.is_power and self.alpha == 1 and self.c == 0 and p.gamma > 0


@dataclass(frozen=True)
class OptimizationResult:
    alpha_star: float
    c_star: float
    value: float
    converged: bool
    evaluations: int


@dataclass(frozen=True)
class SearchConfig:
    """Grid-then-simplex search over ``alpha in [0, 1]`` and ``c in (0, c_max]``.

    ``value_tol`` is relative to the magnitude of the best grid value.
    """

    n_alpha: int = 101
    n_c: int = 101
    c_max: float = 0.5
    c_min: float = 1e-6
    value_tol: float = 1e-8
    x_tol: float = 1e-9
    max_iter: int = 4000

    def __post_init__(self):
        if self.n_alpha < 2 or self.n_c < 2:
            raise ValueError("grid needs at least two points per axis")
        if not 0 < self.c_min < self.c_max:
            raise ValueError("need 0 < c_min < c_max")


def k_constant(market: MarketModel, prefs: RetireePreferences, c: float) -> float:
    """Effective discount rate of ``e^{-rho t} E[X(t)**gamma]`` net of mortality."""
    if not prefs.is_power:
        raise ValueError("k is defined for power utility only")
    g = prefs.gamma
    return 0.5 * g / (g - 1.0) * market.sharpe_ratio**2 + g * (c - market.r) + prefs.rho


def _infinite_by_corner(inputs: PowerValueInputs) -> bool:
    g = inputs.prefs.gamma
    if g < 0 and inputs.c == 0:
        return True
    return g < 0 and inputs.alpha == 1 and inputs.prefs.b > 0


def finiteness_check(inputs: PowerValueInputs, quad: QuadratureConfig = DEFAULT_QUAD) -> Finiteness:
    """Classify a constant policy as finite, infinite or the degenerate zero case."""
    if not inputs.prefs.is_power:
        raise ValueError("finiteness_check applies to power utility")
    if inputs.is_degenerate:
        return Finiteness.DEGENERATE_ZERO
    if _infinite_by_corner(inputs):
        return Finiteness.INFINITE
    if inputs.horizon is not None:
        return Finiteness.FINITE
    g, a = inputs.prefs.gamma, inputs.alpha
    k = k_constant(inputs.market, inputs.prefs, inputs.c)
    try:
        if abs(k) < K_ZERO_THRESHOLD:
            mort.expected_A_power(inputs.mortality, g, a, quad)
        else:
            mort.mgf_A_power(inputs.mortality, -k, g, a, quad)
    except DivergenceError:
        return Finiteness.INFINITE
    return Finiteness.FINITE


def _truncated_integrals(mortality, k, exponent, horizon, quad):
    """``int_0^T e^{-kt} S^e dt`` and ``int_0^T e^{-kt} lambda S^e dt``."""

    def tail(t):
        return np.exp(-k * t - exponent * mortality.integrated_hazard(t))

    def dens(t):
        return mortality.hazard(t) * tail(t)

    kw = dict(tol=quad.absolute_tolerance, rel_tol=quad.relative_tolerance,
              max_subdivisions=quad.max_subdivisions)
    i_tail, _ = adaptive_simpson(tail, 0.0, horizon, **kw)
    i_dens, _ = adaptive_simpson(dens, 0.0, horizon, **kw)
    return i_tail, i_dens


def value_constant(inputs: PowerValueInputs, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Expected discounted utility of the constant policy under the Merton stock fraction.

    Logarithmic preferences are accepted too and dispatched to
    :func:`log_value_constant`.

    Raises:
        InfiniteValueError: for infinite or degenerate-zero inputs, with the
            :class:`Finiteness` classification attached.
    """
    if not inputs.prefs.is_power:
        return log_value_constant(inputs, quad)
    cls = finiteness_check(inputs, quad)
    if cls is not Finiteness.FINITE:
        raise InfiniteValueError(f"value is not finite: {cls.value}", cls)

    prefs = inputs.prefs
    g, b, a, c = prefs.gamma, prefs.b, inputs.alpha, inputs.c
    exponent = 1.0 - g * a
    k = k_constant(inputs.market, prefs, c)
    cons_w = c**g
    beq_w = 0.0 if b == 0 else b * (1.0 - a) ** g

    if inputs.horizon is not None:
        i_tail, i_dens = _truncated_integrals(inputs.mortality, k, exponent, inputs.horizon, quad)
        bracket = cons_w * i_tail + beq_w * i_dens
    elif abs(k) < K_ZERO_THRESHOLD:
        e_a = mort.expected_A_power(inputs.mortality, g, a, quad)
        bracket = cons_w * e_a + beq_w / exponent
    elif abs(k) < _K_SMALL:
        # (1 - M) / k cancels badly here; integrate the tail itself
        tail = mort.discounted_tail_A_power(inputs.mortality, -k, g, a, quad)
        bracket = cons_w * tail + beq_w * (1.0 - k * tail) / exponent
    else:
        m = mort.mgf_A_power(inputs.mortality, -k, g, a, quad)
        bracket = cons_w * (1.0 - m) / k + beq_w * m / exponent
    return prefs.x0**g / g * bracket


@dataclass(frozen=True)
class _LogMoments:
    """Policy-independent integrals behind the log-utility constant-policy value."""

    surv: float  # int e^{-rho t} S
    surv_t: float  # int t e^{-rho t} S
    surv_h: float  # int e^{-rho t} S H
    dens: float  # int e^{-rho t} lambda S
    dens_t: float  # int t e^{-rho t} lambda S
    dens_h: float  # int e^{-rho t} lambda S H


def _log_moments(mortality, rho, horizon, quad) -> _LogMoments:
    end = quad.truncation_horizon if horizon is None else horizon
    if horizon is None:
        # e^{-rho t} S(t) (1 + t)(1 + H) bounds every integrand; make sure it is negligible
        while end < quad.max_horizon:
            h_end = float(mortality.integrated_hazard(end))
            if math.exp(-rho * end - h_end) * (1 + end) * (1 + h_end) * (1 + float(mortality.hazard(end))) < quad.absolute_tolerance:
                break
            end = min(2 * end, quad.max_horizon)

    def make(weight):
        def f(t):
            big_h = mortality.integrated_hazard(t)
            base = np.exp(-rho * t - big_h)
            return base * weight(t, big_h)
        return f

    kw = dict(tol=quad.absolute_tolerance, rel_tol=quad.relative_tolerance,
              max_subdivisions=quad.max_subdivisions)
    weights = [
        lambda t, h: 1.0,
        lambda t, h: t,
        lambda t, h: h,
        lambda t, h: mortality.hazard(t),
        lambda t, h: t * mortality.hazard(t),
        lambda t, h: h * mortality.hazard(t),
    ]
    vals = [adaptive_simpson(make(w), 0.0, end, **kw)[0] for w in weights]
    return _LogMoments(*vals)


def log_value_constant(inputs: PowerValueInputs, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Log-utility value of a constant ``(alpha, c)`` with the log Merton fraction.

    Uses ``E[log X(t)] = log x0 + (r + theta**2/2 - c) t + alpha H(t)``.
    """
    prefs = inputs.prefs
    mom = _log_moments(inputs.mortality, prefs.rho, inputs.horizon, quad)
    return _log_value_from_moments(mom, inputs.market, prefs, inputs.alpha, inputs.c)


def _log_value_from_moments(mom, market, prefs, alpha, c):
    drift = market.r + 0.5 * market.sharpe_ratio**2 - c
    log_x0 = np.log(prefs.x0)
    with np.errstate(divide="ignore"):
        cons = (np.log(c) + log_x0) * mom.surv + drift * mom.surv_t + alpha * mom.surv_h
        if prefs.b == 0:
            beq = 0.0
        else:
            beq = prefs.b * ((np.log1p(-alpha) + log_x0) * mom.dens + drift * mom.dens_t + alpha * mom.dens_h)
    return cons + beq


class ValueGrid:
    """Vectorised power-utility values on a fixed composite Gauss-Legendre rule.

    Used to seed the optimizer and for dense verification grids; it agrees
    with :func:`value_constant` to roughly 1e-10 relative accuracy.
    """

    def __init__(self, mortality, market, prefs, horizon=None, k_range=(-1.0, 1.0), exponent_min=None,
                 panels_per_year=2, order=8):
        if not prefs.is_power:
            raise ValueError("ValueGrid handles power utility; log utility has closed-form moments")
        self.mortality, self.market, self.prefs = mortality, market, prefs
        g = prefs.gamma
        if exponent_min is None:
            exponent_min = 1.0 - max(g, 0.0)
        if horizon is None:
            horizon = 60.0
            k_lo = min(k_range[0], 0.0)
            # only seeds the polish, so a 1e-16 relative tail is plenty
            while exponent_min * float(mortality.integrated_hazard(horizon)) + k_lo * horizon < 37.0:
                horizon += 20.0
                if horizon > 1000:
                    raise DivergenceError("grid horizon could not bound the tail", horizon=horizon)
        self.horizon = horizon
        n_panels = max(8, int(math.ceil(horizon * panels_per_year)))
        self.t, self.w = gauss_legendre_panels(0.0, horizon, n_panels, order)
        self.big_h = mortality.integrated_hazard(self.t)
        self.lam = mortality.hazard(self.t)

    def values(self, alphas, cs):
        """Matrix of values with rows indexed by ``alphas`` and columns by ``cs``."""
        prefs = self.prefs
        g, b = prefs.gamma, prefs.b
        alphas = np.asarray(alphas, dtype=float)
        cs = np.asarray(cs, dtype=float)
        ks = np.array([k_constant(self.market, prefs, c) for c in cs])
        disc = np.exp(-np.outer(ks, self.t))  # (n_c, n_t)
        out = np.empty((alphas.size, cs.size))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            cons_w = np.power(cs, g)
            for i, a in enumerate(alphas):
                base = self.w * np.exp(-(1.0 - g * a) * self.big_h)
                i_tail = disc @ base
                i_dens = disc @ (base * self.lam)
                beq_w = 0.0 if b == 0 else b * (1.0 - a) ** g
                out[i] = prefs.x0**g / g * (cons_w * i_tail + beq_w * i_dens)
        out[~np.isfinite(out)] = -np.inf
        return out


def _grid_axes(search: SearchConfig, alpha_fixed):
    alphas = np.array([alpha_fixed]) if alpha_fixed is not None else np.linspace(0.0, 1.0, search.n_alpha)
    cs = np.linspace(search.c_max / search.n_c, search.c_max, search.n_c)
    return alphas, cs


def optimize(mortality: MortalityModel, market: MarketModel, prefs: RetireePreferences,
             search: SearchConfig = SearchConfig(), horizon: float | None = None,
             alpha: float | None = None, quad: QuadratureConfig = DEFAULT_QUAD) -> OptimizationResult:
    """Maximise the constant-policy value over ``(alpha, c)``.

    Args:
        horizon: Ignore all utility after this many years (``None`` for the
            whole lifetime).
        alpha: Pin the tontine fraction and optimise ``c`` only.

    Raises:
        InfiniteValueError: if every grid point has an infinite or undefined value.
    """
    alphas, cs = _grid_axes(search, alpha)

    if not prefs.is_power:
        return _optimize_log(mortality, market, prefs, search, horizon, alpha, quad)

    ks = [k_constant(market, prefs, c) for c in (search.c_min, search.c_max)]
    try:
        grid = ValueGrid(mortality, market, prefs, horizon=horizon, k_range=(min(ks), max(ks)))
    except DivergenceError:
        _raise_if_all_infinite(mortality, market, prefs, search, alpha, quad)
        raise DivergenceError("the search grid mixes finite and infinite values; "
                              "lower c_max to stay inside the finite region") from None
    vals = grid.values(alphas, cs)
    if not np.any(np.isfinite(vals)):
        raise InfiniteValueError("no finite value on the search grid", Finiteness.INFINITE)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    a0, c0 = float(alphas[i]), float(cs[j])
    evaluations = vals.size

    def value_at(a, c):
        inputs = PowerValueInputs(mortality, market, prefs, c=c, alpha=a, horizon=horizon)
        try:
            return value_constant(inputs, quad)
        except (InfiniteValueError, NumericalError):
            return -math.inf

    best = (value_at(a0, c0), a0, c0)

    # values scale like x0**gamma, so the value tolerance is relative to the seed
    scale = abs(best[0]) if math.isfinite(best[0]) and best[0] != 0 else 1.0

    if alpha is None:
        def objective(x):
            a = min(max(x[0], 0.0), 1.0)
            c = min(max(x[1], search.c_min), search.c_max)
            return -value_at(a, c) / scale

        x0 = [a0, c0]
        bounds = [(0.0, 1.0), (search.c_min, search.c_max)]
        step = [max(1.0 / (search.n_alpha - 1), 1e-3), search.c_max / search.n_c]
        # keep the initial simplex inside the box
        simplex = [x0,
                   [a0 - step[0] if a0 + step[0] > 1 else a0 + step[0], c0],
                   [a0, c0 - step[1] if c0 + step[1] > search.c_max else c0 + step[1]]]
        res = sp_optimize.minimize(objective, x0, method="Nelder-Mead", bounds=bounds,
                                   options=dict(initial_simplex=simplex, xatol=search.x_tol,
                                                fatol=search.value_tol, maxiter=search.max_iter))
        a1 = min(max(float(res.x[0]), 0.0), 1.0)
        c1 = min(max(float(res.x[1]), search.c_min), search.c_max)
    else:
        res = sp_optimize.minimize_scalar(lambda c: -value_at(alpha, c) / scale,
                                          bounds=(max(search.c_min, c0 - search.c_max / search.n_c),
                                                  min(search.c_max, c0 + search.c_max / search.n_c)),
                                          method="bounded",
                                          options=dict(xatol=search.x_tol, maxiter=search.max_iter))
        a1, c1 = float(alpha), float(res.x)
    evaluations += int(res.nfev)
    polished = (value_at(a1, c1), a1, c1)
    if polished[0] >= best[0]:
        best = polished
    converged = bool(res.success) and math.isfinite(best[0])
    return OptimizationResult(alpha_star=best[1], c_star=best[2], value=best[0],
                              converged=converged, evaluations=evaluations)


def _raise_if_all_infinite(mortality, market, prefs, search, alpha, quad):
    """Check the most favourable corner: largest k and largest survival exponent."""
    g = prefs.gamma
    c_best = search.c_max if g > 0 else search.c_min
    if alpha is None:
        a_best = 0.0 if g > 0 else (1.0 if prefs.b == 0 else 1.0 - 1e-9)
    else:
        a_best = alpha
    corner = PowerValueInputs(mortality, market, prefs, c=c_best, alpha=a_best)
    if finiteness_check(corner, quad) is Finiteness.INFINITE:
        raise InfiniteValueError("every policy on the search grid has infinite value", Finiteness.INFINITE)


def _optimize_log(mortality, market, prefs, search, horizon, alpha, quad):
    """Closed-form optimum of the log-utility constant-policy value."""
    mom = _log_moments(mortality, prefs.rho, horizon, quad)
    b = prefs.b
    c_star = mom.surv / (mom.surv_t + b * mom.dens_t)
    c_star = min(max(c_star, search.c_min), search.c_max)
    if alpha is not None:
        a_star = float(alpha)
    elif b == 0:
        a_star = 1.0
    else:
        a_star = min(max(1.0 - b * mom.dens / (mom.surv_h + b * mom.dens_h), 0.0), 1.0)
    value = float(_log_value_from_moments(mom, market, prefs, a_star, c_star))
    return OptimizationResult(alpha_star=a_star, c_star=c_star, value=value, converged=True, evaluations=6)


def drawdown_benchmark(mortality, market, prefs, search: SearchConfig = SearchConfig(),
                       horizon=None, quad: QuadratureConfig = DEFAULT_QUAD) -> OptimizationResult:
    """Income drawdown: the same problem with nothing in the tontine account."""
    return optimize(mortality, market, prefs, search, horizon=horizon, alpha=0.0, quad=quad)


@dataclass(frozen=True)
class SweepCell:
    r: float
    mu: float
    sigma: float
    makeham_c: float
    crra: float
    b: float
    rho: float | None = None  # None: rho = r

    def models(self, base_mortality: MortalityModel = MortalityModel()):
        market = MarketModel(self.r, self.mu, self.sigma)
        mortality = replace(base_mortality, makeham_c=self.makeham_c)
        rho = self.r if self.rho is None else self.rho
        prefs = RetireePreferences.from_crra(self.crra, b=self.b, rho=rho)
        return mortality, market, prefs


@dataclass(frozen=True)
class SweepRow:
    cell: SweepCell
    result: OptimizationResult | None
    error: str | None = None


SENSITIVITY_MARKET_SETS = (
    (0.01, 0.03, 0.15),
    (0.01, 0.03, 0.25),
    (0.01, 0.10, 0.15),
    (0.01, 0.10, 0.25),
    (0.07, 0.10, 0.15),
    (0.07, 0.10, 0.25),
)


def sensitivity_grid(market_sets=SENSITIVITY_MARKET_SETS, makeham_cs=(1.116, 1.134),
                     crras=(3.0, 4.0), bs=tuple(range(1, 8)), rho=None) -> list[SweepCell]:
    return [SweepCell(r, mu, s, mc, crra, float(b), rho)
            for (r, mu, s) in market_sets for mc in makeham_cs for crra in crras for b in bs]


def sensitivity_sweep(cells, search: SearchConfig = SearchConfig(),
                      base_mortality: MortalityModel = MortalityModel(), workers: int = 1,
                      quad: QuadratureConfig = DEFAULT_QUAD) -> list[SweepRow]:
    """Optimise every cell; failures are recorded on the row and the sweep continues."""

    def run(cell):
        try:
            mortality, market, prefs = cell.models(base_mortality)
            return SweepRow(cell, optimize(mortality, market, prefs, search, quad=quad))
        except (ValueError, NumericalError) as exc:
            log.warning("sweep cell %s failed: %s", cell, exc)
            return SweepRow(cell, None, f"{type(exc).__name__}: {exc}")

    cells = list(cells)
    if workers <= 1:
        return [run(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cells))


__all__ = [
    "Finiteness",
    "PowerValueInputs",
    "OptimizationResult",
    "SearchConfig",
    "ValueGrid",
    "SweepCell",
    "SweepRow",
    "SENSITIVITY_MARKET_SETS",
    "k_constant",
    "finiteness_check",
    "value_constant",
    "log_value_constant",
    "optimize",
    "drawdown_benchmark",
    "sensitivity_grid",
    "sensitivity_sweep",
]
