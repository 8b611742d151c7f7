"""Command-line front end: one subcommand per figure-style result.

Every subcommand writes ``<scenario>.csv`` into the output directory (flag
``--output-dir``, else ``$TONTINE_OUTPUT_DIR``, else the working directory),
optionally a matching ``.svg`` line chart, and prints a one-line summary.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chini as chini_mod
from . import log_policy as logp
from . import mortality as mort
from . import power_policy as pp
from . import simulator as sim
from .errors import NumericalError
from .market import MarketModel, RetireePreferences, merton_fraction

OUTPUT_ENV = "TONTINE_OUTPUT_DIR"
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

DEFAULT_CRRA_GRID = "0.1,0.25,0.5,0.75,1,1.5,2,3,4,5,6,7,8,9,10"
DEFAULT_SENS_CRRA = "1,2,3,4,5,6,7,8,9,10"
DEFAULT_MARKET_SETS = ";".join(f"{r}:{m}:{s}" for r, m, s in pp.SENSITIVITY_MARKET_SETS)

EPILOG = """\
subcommands and the results they reproduce:
  mortality-curves          force of mortality and survival probability from age 65
  power-optimize            optimal tontine percentage vs risk aversion, per bequest strength
  power-optimize-truncated  the same with utility after a horizon (default age 100) ignored
  power-consumption         optimal constant consumption with and without the tontine account
  sensitivity               tontine percentage vs risk aversion for alternative market and
                            longevity parameters (one panel per market set and C value)
  log-policy                optimal tontine percentage vs bequest strength, log utility
  log-consumption           optimal consumption rate by age, log utility
  bequest-path              deterministic bequest-account value with risk-free investing
  chini                     variable consumption rate from the Chini equation
  mc-verify                 Monte Carlo check of the analytic expected utility
"""


class CliInputError(ValueError):
    pass


def float_list(text):
    """Comma-separated floats; a single number is a one-element list."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "inf"):
        return None
    return float(text)


def market_sets(text):
    out = []
    for chunk in str(text).split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"market set must be r:mu:sigma, got {chunk!r}")
        out.append(tuple(float(p) for p in parts))
    return out


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise CliInputError(f"expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    """Resolved settings of one invocation."""

    command: str
    scenario: str
    output_dir: Path
    seed: int
    svg: bool
    options: dict = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns):
        opts = {k: v for k, v in vars(ns).items()
                if k not in ("command", "scenario", "output_dir", "seed", "svg", "config", "handler")}
        out = ns.output_dir or os.environ.get(OUTPUT_ENV) or "."
        return cls(ns.command, ns.scenario or ns.command, Path(out), ns.seed, ns.svg, opts)

    def mortality(self):
        o = self.options
        return mort.MortalityModel(o["makeham_a"], o["makeham_b"], o["makeham_c"], o["base_age"])

    def market(self):
        o = self.options
        return MarketModel(o["r"], o["mu"], o["sigma"])

    @property
    def rho(self):
        return self.options["r"] if self.options["rho"] is None else self.options["rho"]

    def prefs(self, crra, b):
        return RetireePreferences.from_crra(crra, b=b, rho=self.rho, x0=self.options["x0"])

    def path(self, suffix):
        return self.output_dir / f"{self.scenario}{suffix}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _svg(cfg, *args, suffix=".svg", **kwargs):
    if cfg.svg:
        from .plotting import line_chart
        line_chart(cfg.path(suffix), *args, **kwargs)


# ---------------------------------------------------------------- commands

def cmd_mortality_curves(cfg: RunConfig):
    o, m = cfg.options, cfg.mortality()
    t = np.arange(0.0, o["t_max"] + 0.5 * o["t_step"], o["t_step"])
    haz, surv = mort.force_of_mortality(m, t), mort.survival(m, t)
    rows = [dict(t=ti, age=m.base_age + ti, force_of_mortality=h, survival=s) for ti, h, s in zip(t, haz, surv)]
    write_csv(cfg.path(".csv"), ["t", "age", "force_of_mortality", "survival"], rows)
    _svg(cfg, m.base_age + t, {"force of mortality": haz, "survival probability": surv}, "age", "value", logy=True)
    return f"mortality curves: {len(rows)} ages, life expectancy {mort.life_expectancy(m):.4g} years"


def _power_rows(cfg, horizon):
    o = cfg.options
    m, mk = cfg.mortality(), cfg.market()
    search = pp.SearchConfig(c_max=o["c_max"])
    rows = []
    for b in o["b"]:
        for crra in o["crra"]:
            res = pp.optimize(m, mk, cfg.prefs(crra, b), search, horizon=horizon)
            rows.append(dict(crra=crra, b=b, alpha_star=res.alpha_star, c_star=res.c_star,
                             value=res.value, converged=res.converged))
    return rows


def _by_b(rows, key, scale=1.0):
    xs, ys = {}, {}
    for r in rows:
        label = f"b={r['b']:g}"
        xs.setdefault(label, []).append(r["crra"])
        ys.setdefault(label, []).append(scale * r[key])
    return xs, ys


def cmd_power_optimize(cfg: RunConfig, horizon=None):
    rows = _power_rows(cfg, horizon)
    write_csv(cfg.path(".csv"), ["crra", "b", "alpha_star", "c_star", "value", "converged"], rows)
    xs, ys = _by_b(rows, "alpha_star", 100.0)
    _svg(cfg, xs, ys, "risk aversion 1-gamma", "tontine account (%)")
    lo = min(r["alpha_star"] for r in rows)
    hi = max(r["alpha_star"] for r in rows)
    return f"power optimum over {len(rows)} cells: alpha_star in [{lo:.4f}, {hi:.4f}]"


def cmd_power_optimize_truncated(cfg: RunConfig):
    return cmd_power_optimize(cfg, horizon=cfg.options["horizon"])


def cmd_power_consumption(cfg: RunConfig):
    o = cfg.options
    m, mk = cfg.mortality(), cfg.market()
    search = pp.SearchConfig(c_max=o["c_max"])
    rows = []
    for b in o["b"]:
        for crra in o["crra"]:
            prefs = cfg.prefs(crra, b)
            with_t = pp.optimize(m, mk, prefs, search)
            without = pp.drawdown_benchmark(m, mk, prefs, search)
            rows.append(dict(crra=crra, b=b, alpha_star=with_t.alpha_star, c_star_tontine=with_t.c_star,
                             c_star_drawdown=without.c_star))
    write_csv(cfg.path(".csv"), ["crra", "b", "alpha_star", "c_star_tontine", "c_star_drawdown"], rows)
    xs, ys, styles = {}, {}, {}
    for r in rows:
        for key, tag, style in (("c_star_tontine", "with tontine", "-"), ("c_star_drawdown", "without tontine", "--")):
            label = f"b={r['b']:g} {tag}"
            xs.setdefault(label, []).append(r["crra"])
            ys.setdefault(label, []).append(100.0 * r[key])
            styles[label] = style
    _svg(cfg, xs, ys, "risk aversion 1-gamma", "consumption rate (%)", styles=styles)
    gap = max(r["c_star_tontine"] - r["c_star_drawdown"] for r in rows)
    return f"consumption comparison over {len(rows)} cells: largest gain {gap:.4f}"


def cmd_sensitivity(cfg: RunConfig):
    o = cfg.options
    base = cfg.mortality()
    rho = o["rho"]  # None: rho follows r in every cell
    cells = pp.sensitivity_grid(o["market_sets"], o["makeham_c_values"], o["crra"], o["b"], rho=rho)
    rows_out = pp.sensitivity_sweep(cells, pp.SearchConfig(c_max=o["c_max"]), base, workers=o["workers"])
    rows, failures = [], []
    for row in rows_out:
        c = row.cell
        rec = dict(makeham_c=c.makeham_c, r=c.r, mu=c.mu, sigma=c.sigma, crra=c.crra, b=c.b,
                   alpha_star=math.nan, c_star=math.nan, status="ok")
        if row.result is None:
            rec["status"] = "failed"
            failures.append(f"{c}: {row.error}")
        else:
            rec.update(alpha_star=row.result.alpha_star, c_star=row.result.c_star)
        rows.append(rec)
    write_csv(cfg.path(".csv"), ["makeham_c", "r", "mu", "sigma", "crra", "b", "alpha_star", "c_star", "status"], rows)
    log_path = cfg.path(".log")
    if failures:
        log_path.write_text("\n".join(failures) + "\n")
    elif log_path.exists():
        log_path.unlink()
    if len(failures) == len(rows):
        raise NumericalError("every sensitivity cell failed; see " + str(log_path))
    if cfg.svg:
        for mc in o["makeham_c_values"]:
            for r, mu, s in o["market_sets"]:
                panel = [x for x in rows if x["makeham_c"] == mc and (x["r"], x["mu"], x["sigma"]) == (r, mu, s)]
                xs, ys = _by_b(panel, "alpha_star", 100.0)
                _svg(cfg, xs, ys, "risk aversion 1-gamma", "tontine account (%)",
                     title=f"C={mc:g}, r={r:g}, mu={mu:g}, sigma={s:g}",
                     suffix=f"_C{mc:g}_r{r:g}_mu{mu:g}_s{s:g}.svg")
    ok = [x["alpha_star"] for x in rows if x["status"] == "ok"]
    return (f"sensitivity: {len(ok)}/{len(rows)} cells solved, alpha_star in "
            f"[{min(ok):.4f}, {max(ok):.4f}], {len(failures)} failures")


def cmd_log_policy(cfg: RunConfig):
    o = cfg.options
    m, mk = cfg.mortality(), cfg.market()
    rows = []
    for b in o["b"]:
        prefs = RetireePreferences.logarithmic(b=b, rho=cfg.rho, x0=o["x0"])
        rows.append(dict(b=b, alpha_star=logp.log_tontine_fraction(m, prefs),
                         omega_star=merton_fraction(mk, prefs), c_star_0=logp.log_consumption(m, prefs, 0.0)))
    write_csv(cfg.path(".csv"), ["b", "alpha_star", "omega_star", "c_star_0"], rows)
    _svg(cfg, [r["b"] for r in rows], {"tontine account": [100 * r["alpha_star"] for r in rows]},
         "bequest strength b", "tontine account (%)")
    return "log policy: " + ", ".join(f"b={r['b']:g} alpha_star={r['alpha_star']:.4f}" for r in rows[:3]) + \
        (" ..." if len(rows) > 3 else "")


def cmd_log_consumption(cfg: RunConfig):
    o = cfg.options
    m = cfg.mortality()
    t = np.arange(0.0, o["t_max"] + 0.5 * o["t_step"], o["t_step"])
    rows, ys = [], {}
    for b in o["b"]:
        prefs = RetireePreferences.logarithmic(b=b, rho=cfg.rho, x0=o["x0"])
        c = [logp.log_consumption(m, prefs, float(ti)) for ti in t]
        ys[f"b={b:g}"] = [100 * v for v in c]
        rows.extend(dict(b=b, t=ti, age=m.base_age + ti, c_star=ci) for ti, ci in zip(t, c))
    write_csv(cfg.path(".csv"), ["b", "t", "age", "c_star"], rows)
    _svg(cfg, m.base_age + t, ys, "age", "consumption rate (%)")
    return f"log consumption: {len(o['b'])} bequest strengths x {t.size} ages"


def cmd_bequest_path(cfg: RunConfig):
    o = cfg.options
    m = cfg.mortality()
    alpha = o["alpha"]
    if not 0 <= alpha < 1:
        raise CliInputError("bequest-path needs 0 <= alpha < 1")
    x0 = o["z0"] / (1.0 - alpha)
    t = np.arange(0.0, o["t_max"] + 0.5 * o["t_step"], o["t_step"])
    rec = sim.simulate_deterministic(m, o["r"], alpha, o["c"], x0, horizon=float(t[-1]), times=t)
    y, z, div = rec.Y, rec.Z, rec.credits_diverted
    rows = [dict(t=ti, age=m.base_age + ti, X=rec.X[i], Y=y[i], Z=z[i],
                 credits_received=rec.credits_received[i], credits_diverted=div[i])
            for i, ti in enumerate(t)]
    write_csv(cfg.path(".csv"), ["t", "age", "X", "Y", "Z", "credits_received", "credits_diverted"], rows)
    _svg(cfg, m.base_age + t, {"bequest account": z}, "age", "bequest account value", logy=True)
    return f"bequest path: Z({t[-1]:g}) = {z[-1]:.6g}, minimum {z.min():.6g}"


def cmd_chini(cfg: RunConfig):
    o = cfg.options
    m, mk = cfg.mortality(), cfg.market()
    prefs = cfg.prefs(o["crra"], o["b"])
    if not prefs.is_power:
        raise CliInputError("the Chini equation needs power utility (crra != 1)")
    sol = chini_mod.solve_chini(m, mk, prefs, o["alpha"], horizon=o["horizon"], step=o["step"])
    const = pp.optimize(m, mk, prefs, pp.SearchConfig(c_max=o["c_max"]), alpha=o["alpha"])
    t = np.arange(0.0, o["t_max"] + 0.5 * o["t_step"], o["t_step"])
    h, c = sol.h_at(t), sol.c_star(t)
    rows = [dict(t=ti, age=m.base_age + ti, h=h[i], c_star=c[i], c_star_constant=const.c_star)
            for i, ti in enumerate(t)]
    write_csv(cfg.path(".csv"), ["t", "age", "h", "c_star", "c_star_constant"], rows)
    _svg(cfg, m.base_age + t, {"variable": 100 * c, "best constant": np.full(t.size, 100 * const.c_star)},
         "age", "consumption rate (%)", styles={"best constant": "--"})
    return f"chini: h(0) = {sol.h[0]:.8g}, c*(0) = {c[0]:.6g}, step {sol.step:g}"


def cmd_mc_verify(cfg: RunConfig):
    o = cfg.options
    m, mk = cfg.mortality(), cfg.market()
    prefs = cfg.prefs(o["crra"], o["b"])
    horizon = o["horizon"]
    inputs = pp.PowerValueInputs(m, mk, prefs, c=o["c"], alpha=o["alpha"], horizon=horizon)
    analytic = pp.value_constant(inputs)
    policy = sim.Policy(o["alpha"], o["c"], merton_fraction(mk, prefs))
    rows, running = [], {}
    modes = [(sim.LIFETIME, math.inf if horizon is None else horizon),
             (sim.SURVIVAL_WEIGHTED, o["weighted_horizon"] if horizon is None else horizon)]
    for mode, h in modes:
        conf = sim.SimulationConfig(n_paths=o["n_paths"], policy=policy, prefs=prefs, dt=o["dt"],
                                    seed=cfg.seed, horizon=h, mode=mode,
                                    keep_paths=o["keep_paths"] if mode == sim.LIFETIME else 0,
                                    workers=o["workers"])
        ens = sim.simulate_paths(m, mk, conf)
        est, se = sim.mc_expected_utility(ens, prefs)
        util = ens.path_utility()
        running[mode] = np.cumsum(util) / np.arange(1, util.size + 1)
        rows.append(dict(mode=mode, analytic=analytic, mc_estimate=est, standard_error=se,
                         z_score=(est - analytic) / se))
        if ens.records:
            sim.export_csv(ens.records, cfg.path("_paths.csv"))
    write_csv(cfg.path(".csv"), ["mode", "analytic", "mc_estimate", "standard_error", "z_score"], rows)
    # log-spaced subsample keeps the chart small at large path counts
    keep = np.unique(np.geomspace(1, o["n_paths"], 2000).astype(np.int64)) - 1
    series = {k: v[keep] for k, v in running.items()}
    series["analytic"] = np.full(keep.size, analytic)
    _svg(cfg, keep + 1, series, "paths simulated", "expected utility estimate",
         styles={"analytic": "--"})
    worst = max(abs(r["z_score"]) for r in rows)
    return f"mc-verify: analytic {analytic:.8g}, worst |z| = {worst:.3f} over {len(rows)} estimators"


# ----------------------------------------------------------------- parser

def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run")
    g.add_argument("--config", help="file of key=value lines; explicit flags take precedence")
    g.add_argument("--output-dir", help=f"directory for outputs (default ${OUTPUT_ENV} or .)")
    g.add_argument("--scenario", help="base name of output files (default: the subcommand)")
    g.add_argument("--svg", action="store_true", help="also write SVG line charts")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1, help="threads for sweeps and simulation blocks")
    g = p.add_argument_group("model")
    g.add_argument("--makeham-a", type=float, default=2.2e-4)
    g.add_argument("--makeham-b", type=float, default=2.7e-6)
    g.add_argument("--makeham-c", type=float, default=1.124)
    g.add_argument("--base-age", type=float, default=65.0)
    g.add_argument("--r", type=float, default=0.05, help="risk-free rate")
    g.add_argument("--mu", type=float, default=0.085, help="stock drift")
    g.add_argument("--sigma", type=float, default=0.2, help="stock volatility")
    g.add_argument("--rho", type=optional_float, default=None, help="time preference (default: equal to r)")
    g.add_argument("--x0", type=float, default=1.0, help="initial pension savings")
    g.add_argument("--c-max", type=float, default=0.5, help="upper end of the consumption search")
    return p


COMMANDS = {
    "mortality-curves": (cmd_mortality_curves, "force of mortality and survival curves"),
    "power-optimize": (cmd_power_optimize, "optimal constant tontine share, power utility"),
    "power-optimize-truncated": (cmd_power_optimize_truncated, "the same, ignoring utility past a horizon"),
    "power-consumption": (cmd_power_consumption, "optimal constant consumption with and without tontine"),
    "sensitivity": (cmd_sensitivity, "tontine share under alternative market and mortality parameters"),
    "log-policy": (cmd_log_policy, "closed-form log-utility tontine share and stock fraction"),
    "log-consumption": (cmd_log_consumption, "closed-form log-utility consumption by age"),
    "bequest-path": (cmd_bequest_path, "deterministic account values with risk-free investing"),
    "chini": (cmd_chini, "variable consumption from the Chini equation"),
    "mc-verify": (cmd_mc_verify, "Monte Carlo check of the analytic value"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tontine-bequest",
        description="Optimal tontine allocation, consumption and investment with a bequest account.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parent = _common_parent()

    def add(name):
        handler, help_text = COMMANDS[name]
        sp = sub.add_parser(name, parents=[parent], help=help_text, description=help_text)
        sp.set_defaults(handler=handler)
        return sp

    sp = add("mortality-curves")
    sp.add_argument("--t-max", type=float, default=60.0)
    sp.add_argument("--t-step", type=float, default=0.5)

    for name, horizon in (("power-optimize", None), ("power-optimize-truncated", 35.0)):
        sp = add(name)
        sp.add_argument("--crra", type=float_list, default=float_list(DEFAULT_CRRA_GRID),
                        help="risk aversion values 1-gamma, comma-separated")
        sp.add_argument("--b", type=float_list, default=float_list("0,1,2,3,4,5,6,7"),
                        help="bequest strengths, comma-separated")
        if horizon is not None:
            sp.add_argument("--horizon", type=float, default=horizon, help="years of utility counted")

    sp = add("power-consumption")
    sp.add_argument("--crra", type=float_list, default=float_list(DEFAULT_CRRA_GRID))
    sp.add_argument("--b", type=float_list, default=float_list("1,3,5,7"))

    sp = add("sensitivity")
    sp.add_argument("--crra", type=float_list, default=float_list(DEFAULT_SENS_CRRA))
    sp.add_argument("--b", type=float_list, default=float_list("1,2,3,4,5,6,7"))
    sp.add_argument("--makeham-c-values", type=float_list, default=float_list("1.116,1.134"))
    sp.add_argument("--market-sets", type=market_sets, default=market_sets(DEFAULT_MARKET_SETS),
                    help="semicolon-separated r:mu:sigma triples")

    sp = add("log-policy")
    sp.add_argument("--b", type=float_list, default=float_list(",".join(str(0.5 * i) for i in range(15))))

    sp = add("log-consumption")
    sp.add_argument("--b", type=float_list, default=float_list("1,2,3,4,5,6,7"))
    sp.add_argument("--t-max", type=float, default=35.0)
    sp.add_argument("--t-step", type=float, default=0.5)

    sp = add("bequest-path")
    sp.add_argument("--alpha", type=float, default=0.8)
    sp.add_argument("--c", type=float, default=0.09)
    sp.add_argument("--z0", type=float, default=20.0, help="initial bequest account value")
    sp.add_argument("--t-max", type=float, default=55.0)
    sp.add_argument("--t-step", type=float, default=0.25)

    sp = add("chini")
    sp.add_argument("--crra", type=float, default=0.5)
    sp.add_argument("--b", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--horizon", type=float, default=60.0, help="terminal time of the backward solve")
    sp.add_argument("--step", type=float, default=1.0 / 16, help="initial RK4 step")
    sp.add_argument("--t-max", type=float, default=40.0)
    sp.add_argument("--t-step", type=float, default=0.25)

    sp = add("mc-verify")
    sp.add_argument("--crra", type=float, default=0.5)
    sp.add_argument("--b", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=0.8)
    sp.add_argument("--c", type=float, default=0.07)
    sp.add_argument("--horizon", type=optional_float, default=None, help="ignore utility after this many years")
    sp.add_argument("--weighted-horizon", type=float, default=60.0,
                    help="integration range of the survival-weighted estimator")
    sp.add_argument("--n-paths", type=int, default=100_000)
    sp.add_argument("--dt", type=float, default=1.0 / 252)
    sp.add_argument("--keep-paths", type=int, default=0, help="export this many paths to <scenario>_paths.csv")
    return parser, sub


def read_config(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliInputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(subparser, path):
    values = read_config(path)
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(actions))
    if unknown:
        raise CliInputError(f"unknown config key(s): {', '.join(unknown)}")
    defaults = {}
    for key, value in values.items():
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = _bool(value)
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise CliInputError(f"config key {key}: {exc}") from exc
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)


def parse(argv):
    parser, sub = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        _apply_config(sub.choices[ns.command], ns.config)
        ns = parser.parse_args(argv)
    return ns


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse(argv)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse: --help exits 0, usage errors exit 2
        return int(exc.code or 0)
    cfg = RunConfig.from_namespace(ns)
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        summary = ns.handler(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
