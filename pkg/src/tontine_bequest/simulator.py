"""Two-account savings dynamics and a Monte Carlo estimator of expected utility.

Total savings ``X`` follow::

    dX = (r + (mu - r) omega + alpha lambda(t) - c(t)) X dt + sigma omega X dW

and are split continuously into the tontine account ``Y = alpha X`` and the
bequest account ``Z = (1 - alpha) X``. Paths are stepped with the exact
log-normal increment for frozen ``omega`` and ``c`` (midpoint values) and the
exact mortality increment ``alpha (H(t + dt) - H(t))``, so ``X > 0`` holds by
construction.

Every path owns a Philox stream keyed by ``(seed, path index)``: it first
yields the uniform for the death time and then exactly the normals that path
needs. Results therefore do not depend on how paths are grouped into blocks or
how many threads run them, and two policies simulated with the same seed share
their random numbers path by path.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .market import MarketModel, RetireePreferences
from .mortality import inverse_integrated_hazard

Schedule = Union[float, Callable[[np.ndarray], np.ndarray]]

LIFETIME = "lifetime"
SURVIVAL_WEIGHTED = "survival_weighted"


def rebalance(total, alpha):
    """Split total savings into ``(tontine, bequest)`` accounts at fraction ``alpha``."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    y = alpha * np.asarray(total, dtype=float)
    return y, np.asarray(total, dtype=float) - y


def _as_schedule(s: Schedule):
    if callable(s):
        return s
    value = float(s)
    return lambda t: np.full(np.shape(t), value)


@dataclass(frozen=True)
class Policy:
    """Controls: tontine fraction ``alpha``, consumption rate ``c`` and stock fraction ``omega``.

    ``c`` and ``omega`` may be constants or vectorised functions of time.
    """

    alpha: float
    c: Schedule
    omega: Schedule

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not callable(self.c) and self.c < 0:
            raise ValueError("consumption rate must be >= 0")

    def c_at(self, t):
        return _as_schedule(self.c)(np.asarray(t, dtype=float))

    def omega_at(self, t):
        return _as_schedule(self.omega)(np.asarray(t, dtype=float))


@dataclass
class PathRecord:
    times: np.ndarray
    X: np.ndarray
    alpha: float
    credits_received: np.ndarray
    death_time: float | None = None
    realized_utility: float | None = None

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")

    @property
    def Y(self):
        return rebalance(self.X, self.alpha)[0]

    @property
    def Z(self):
        return rebalance(self.X, self.alpha)[1]

    @property
    def credits_diverted(self):
        return (1.0 - self.alpha) * self.credits_received

    @property
    def censored(self) -> bool:
        return self.death_time is None


def _cumulative_credits(mortality, times, alpha, x_func):
    """``alpha * int_0^t lambda(u) X(u) du`` on ``times`` with 8-point Gauss per interval."""
    x, w = np.polynomial.legendre.leggauss(8)
    lo, hi = times[:-1], times[1:]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (lo + hi)[:, None] + half[:, None] * x[None, :]
    vals = mortality.hazard(nodes) * x_func(nodes)
    pieces = alpha * (vals * w[None, :]).sum(axis=1) * half
    return np.concatenate([[0.0], np.cumsum(pieces)])


def simulate_deterministic(mortality, r: float, alpha: float, c: float, x0: float,
                           horizon: float, n_points: int = 1001, times=None) -> PathRecord:
    """Savings fully in the risk-free asset: ``X(t) = x0 exp((r - c) t + alpha H(t))``."""
    if not x0 > 0:
        raise ValueError("x0 must be > 0")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if times is None:
        if not horizon > 0:
            raise ValueError("horizon must be > 0")
        times = np.linspace(0.0, horizon, n_points)
    times = np.asarray(times, dtype=float)

    def x_func(t):
        return x0 * np.exp((r - c) * t + alpha * mortality.integrated_hazard(t))

    return PathRecord(times=times, X=x_func(times), alpha=alpha,
                      credits_received=_cumulative_credits(mortality, times, alpha, x_func))


def bequest_growth_rate(mortality, r, alpha, c, t):
    """``d log Z / dt = r + alpha lambda(t) - c`` along the deterministic path."""
    return r + alpha * mortality.hazard(t) - c


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo settings.

    ``mode`` is ``"lifetime"`` (random death time, stop at
    ``min(death, horizon)``) or ``"survival_weighted"`` (no death; utility is
    weighted by ``S(t)`` and ``lambda(t) S(t)`` up to a finite ``horizon``).
    """

    n_paths: int
    policy: Policy
    prefs: RetireePreferences
    dt: float = 1.0 / 252
    seed: int = 0
    horizon: float = math.inf
    mode: str = LIFETIME
    keep_paths: int = 0
    workers: int = 1
    block_size: int = 256

    def __post_init__(self):
        if not isinstance(self.n_paths, (int, np.integer)) or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise ValueError("dt must be a positive finite number")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.mode not in (LIFETIME, SURVIVAL_WEIGHTED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == SURVIVAL_WEIGHTED and not math.isfinite(self.horizon):
            raise ValueError("survival-weighted mode needs a finite horizon")
        if self.workers < 1 or self.block_size < 1 or self.keep_paths < 0:
            raise ValueError("workers and block_size must be >= 1, keep_paths >= 0")


@dataclass
class SimulationEnsemble:
    config: SimulationConfig
    death_time: np.ndarray
    censored: np.ndarray
    consumption_utility: np.ndarray
    bequest_utility: np.ndarray
    log_wealth_end: np.ndarray
    records: list = field(default_factory=list)

    @property
    def prefs(self):
        return self.config.prefs

    @property
    def alpha(self):
        return self.config.policy.alpha

    @property
    def horizon(self):
        return self.config.horizon

    def path_utility(self):
        with np.errstate(invalid="ignore"):
            return self.consumption_utility + self.bequest_utility


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one path."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def _row_total(a):
    # sequential sum: trailing padding adds exact zeros, so the result does not
    # depend on how wide the block happens to be (pairwise summation would)
    if a.shape[1] == 0:
        return np.zeros(a.shape[0])
    return np.cumsum(a, axis=1)[:, -1]


def _utility(prefs, x):
    with np.errstate(divide="ignore", over="ignore"):
        return prefs.utility_of(x)


class _Engine:
    def __init__(self, mortality, market, config: SimulationConfig):
        self.m, self.mk, self.cfg = mortality, market, config
        self.pol = config.policy
        self.prefs = config.prefs

    def _step_terms(self, t0, length):
        """Deterministic log-increment and volatility for steps ``[t0, t0 + length]``."""
        mk, pol = self.mk, self.pol
        mid = t0 + 0.5 * length
        om = pol.omega_at(mid)
        drift = mk.r + (mk.mu - mk.r) * om - 0.5 * (mk.sigma * om) ** 2 - pol.c_at(mid)
        mort_inc = pol.alpha * self.m.hazard_increment(t0, length)
        return drift * length + mort_inc, mk.sigma * om * np.sqrt(length)

    def run_block(self, start, count):
        cfg, m, prefs = self.cfg, self.m, self.prefs
        dt, alpha, rho = cfg.dt, self.pol.alpha, prefs.rho
        rngs = [path_rng(cfg.seed, start + i) for i in range(count)]
        u = np.array([1.0 - g.random() for g in rngs])
        if cfg.mode == LIFETIME:
            tau = inverse_integrated_hazard(m, -np.log(u))
            end = np.minimum(tau, cfg.horizon)
        else:
            tau = np.full(count, math.inf)
            end = np.full(count, cfg.horizon)
        n_full = np.floor(end / dt).astype(np.int64)
        n_full = np.where(n_full * dt > end, n_full - 1, n_full)
        n_max = int(n_full.max())

        z = np.zeros((count, n_max))
        z_part = np.empty(count)
        for i, g in enumerate(rngs):
            draws = g.standard_normal(int(n_full[i]) + 1)
            z[i, : n_full[i]] = draws[:-1]
            z_part[i] = draws[-1]

        grid = dt * np.arange(n_max + 1)
        mean_inc, vol = self._step_terms(grid[:-1], dt)
        inc = mean_inc[None, :] + vol[None, :] * z
        active = np.arange(n_max)[None, :] < n_full[:, None]
        inc = np.where(active, inc, 0.0)
        log_x = np.empty((count, n_max + 1))
        log_x[:, 0] = math.log(prefs.x0)
        np.cumsum(inc, axis=1, out=log_x[:, 1:])
        log_x[:, 1:] += log_x[:, :1]

        t_last = n_full * dt
        part = np.maximum(end - t_last, 0.0)
        p_mean, p_vol = self._step_terms(t_last, part)
        log_x_last = log_x[np.arange(count), n_full]
        log_x_end = log_x_last + p_mean + p_vol * z_part

        cons_grid, cons_end, beq = self._accumulate(grid, log_x, active, n_full, t_last, part, end, log_x_end)

        died = tau <= cfg.horizon
        if cfg.mode == LIFETIME:
            beq = np.zeros(count)
            if prefs.b > 0 and np.any(died):
                estate = _utility(prefs, (1.0 - alpha) * np.exp(log_x_end[died]))
                beq[died] = prefs.b * np.exp(-rho * end[died]) * estate

        records = []
        for i in range(min(count, max(cfg.keep_paths - start, 0))):
            records.append(self._record(i, start, grid, log_x, n_full, end, part, log_x_end, tau, died,
                                        cons_grid[i] + cons_end[i] + beq[i]))
        return dict(death_time=np.where(died, tau, np.nan) if cfg.mode == LIFETIME else tau,
                    censored=~died, consumption_utility=cons_grid + cons_end, bequest_utility=beq,
                    log_wealth_end=log_x_end, records=records)

    def _accumulate(self, grid, log_x, active, n_full, t_last, part, end, log_x_end):
        """Trapezoid sums of the discounted utility flows over each path's steps."""
        cfg, m, prefs = self.cfg, self.m, self.prefs
        rho, alpha, dt = prefs.rho, self.pol.alpha, cfg.dt
        valid = np.concatenate([np.ones((log_x.shape[0], 1), bool), active], axis=1)
        safe_log_x = np.where(valid, log_x, 0.0)
        c_grid = self.pol.c_at(grid)
        c_end = self.pol.c_at(end)
        weight_grid = np.exp(-rho * grid)
        weight_end = np.exp(-rho * end)
        if cfg.mode == SURVIVAL_WEIGHTED:
            weight_grid = weight_grid * np.exp(-m.integrated_hazard(grid))
            weight_end = weight_end * np.exp(-m.integrated_hazard(end))
        with np.errstate(invalid="ignore", over="ignore"):
            f = weight_grid[None, :] * _utility(prefs, c_grid[None, :] * np.exp(safe_log_x))
            f_last = f[np.arange(f.shape[0]), n_full]
            f_end = weight_end * _utility(prefs, c_end * np.exp(log_x_end))
            pair = np.where(active, 0.5 * dt * (f[:, :-1] + f[:, 1:]), 0.0)
            cons_grid = _row_total(pair)
            cons_end = np.where(part > 0, 0.5 * part * (f_last + f_end), 0.0)
            beq = np.zeros(log_x.shape[0])
            if cfg.mode == SURVIVAL_WEIGHTED and prefs.b > 0:
                lam_grid = m.hazard(grid)
                lam_end = m.hazard(end)
                gb = weight_grid[None, :] * lam_grid[None, :] * _utility(prefs, (1 - alpha) * np.exp(safe_log_x))
                gb_last = gb[np.arange(gb.shape[0]), n_full]
                gb_end = weight_end * lam_end * _utility(prefs, (1 - alpha) * np.exp(log_x_end))
                beq = prefs.b * (_row_total(np.where(active, 0.5 * dt * (gb[:, :-1] + gb[:, 1:]), 0.0))
                                 + np.where(part > 0, 0.5 * part * (gb_last + gb_end), 0.0))
        return cons_grid, cons_end, beq

    def _record(self, i, start, grid, log_x, n_full, end, part, log_x_end, tau, died, utility):
        n = int(n_full[i])
        times = grid[: n + 1]
        xs = np.exp(log_x[i, : n + 1])
        if part[i] > 0:
            times = np.append(times, end[i])
            xs = np.append(xs, math.exp(log_x_end[i]))
        lam_x = self.m.hazard(times) * xs
        credits = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (lam_x[:-1] + lam_x[1:]))])
        credits *= self.pol.alpha
        return PathRecord(times=times, X=xs, alpha=self.pol.alpha, credits_received=credits,
                          death_time=float(tau[i]) if died[i] else None, realized_utility=float(utility))


def simulate_paths(mortality, market: MarketModel, config: SimulationConfig) -> SimulationEnsemble:
    """Simulate ``config.n_paths`` independent retirees under ``config.policy``."""
    engine = _Engine(mortality, market, config)
    starts = list(range(0, config.n_paths, config.block_size))
    jobs = [(s, min(config.block_size, config.n_paths - s)) for s in starts]
    if config.workers == 1:
        parts = [engine.run_block(s, n) for s, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda job: engine.run_block(*job), jobs))
    cat = {k: np.concatenate([p[k] for p in parts]) for k in
           ("death_time", "censored", "consumption_utility", "bequest_utility", "log_wealth_end")}
    records = [r for p in parts for r in p["records"]]
    return SimulationEnsemble(config=config, records=records, **cat)


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    est = float(np.mean(values))
    if not math.isfinite(est):
        return est, math.nan
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
    return est, se


def mc_expected_utility(ensemble: SimulationEnsemble, prefs: RetireePreferences,
                        alpha: float | None = None, rho: float | None = None,
                        horizon: float | None = None):
    """Monte Carlo estimate and standard error of the retiree's objective.

    The arguments restate what the ensemble was simulated with; any mismatch
    raises ``ValueError`` because the utilities are accumulated during
    simulation. ``horizon=None`` accepts the ensemble's own horizon.
    """
    cfg = ensemble.config
    if prefs != cfg.prefs:
        raise ValueError("preferences differ from those used to simulate the ensemble")
    if alpha is not None and alpha != cfg.policy.alpha:
        raise ValueError("alpha differs from the simulated policy")
    if rho is not None and rho != cfg.prefs.rho:
        raise ValueError("rho differs from the simulated preferences")
    if horizon is not None and horizon != cfg.horizon:
        raise ValueError("horizon differs from the simulated horizon")
    return _mean_se(ensemble.path_utility())


def paired_difference(a: SimulationEnsemble, b: SimulationEnsemble):
    """Mean and standard error of ``utility_a - utility_b`` over common random numbers."""
    if a.config.seed != b.config.seed or a.config.n_paths != b.config.n_paths:
        raise ValueError("paired comparison needs the same seed and path count")
    if a.config.mode != b.config.mode:
        raise ValueError("paired comparison needs the same simulation mode")
    with np.errstate(invalid="ignore"):
        return _mean_se(a.path_utility() - b.path_utility())


CSV_COLUMNS = ("path_id", "t", "X", "Y", "Z", "credits_received", "credits_diverted", "dead_flag")


def _fmt(x):
    return f"{x:.12g}"


def export_csv(records, path, start_id: int = 0):
    """Write path records in long format, one row per path and time point."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for pid, rec in enumerate(records, start=start_id):
            y, z = rec.Y, rec.Z
            diverted = rec.credits_diverted
            last = len(rec.times) - 1
            for j in range(len(rec.times)):
                dead = int(rec.death_time is not None and j == last)
                w.writerow([pid, _fmt(rec.times[j]), _fmt(rec.X[j]), _fmt(y[j]), _fmt(z[j]),
                            _fmt(rec.credits_received[j]), _fmt(diverted[j]), dead])


__all__ = [
    "LIFETIME",
    "SURVIVAL_WEIGHTED",
    "CSV_COLUMNS",
    "Policy",
    "PathRecord",
    "SimulationConfig",
    "SimulationEnsemble",
    "rebalance",
    "simulate_deterministic",
    "bequest_growth_rate",
    "simulate_paths",
    "path_rng",
    "mc_expected_utility",
    "paired_difference",
    "export_csv",
]
