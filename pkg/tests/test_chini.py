import numpy as np
import pytest

from tontine_bequest import power_policy as pp
from tontine_bequest.chini import (
    ChiniCoefficients,
    bernoulli_solution,
    chini_residual,
    rk4_chini,
    solve_chini,
)
from tontine_bequest.errors import ChiniCrossingError, ConvergenceError
from tontine_bequest.market import MarketModel, RetireePreferences, merton_fraction
from tontine_bequest.mortality import MortalityModel
from tontine_bequest.simulator import Policy, SimulationConfig, mc_expected_utility, simulate_paths

M, MK = MortalityModel(), MarketModel()
WEAK = RetireePreferences.power(0.5, b=2.0)
STRONG = RetireePreferences.power(-3.0, b=3.0)


@pytest.fixture(scope="module")
def weak_solution():
    return solve_chini(M, MK, WEAK, 0.5)


@pytest.mark.parametrize("gamma", [0.5, -3.0])
def test_no_bequest_matches_bernoulli(gamma):
    prefs = RetireePreferences.power(gamma, b=0.0)
    sol = solve_chini(M, MK, prefs, 0.5)
    t = sol.grid[::16]
    exact = bernoulli_solution(M, MK, prefs, 0.5, sol.terminal_horizon, t)
    scale = max(1.0, float(np.max(np.abs(exact))))
    assert np.max(np.abs(sol.h[::16] - exact)) < 1e-6 * scale


def test_bernoulli_closed_form_has_tiny_residual():
    prefs = RetireePreferences.power(0.5, b=0.0)
    grid = np.linspace(0.0, 60.0, 2881)
    h = bernoulli_solution(M, MK, prefs, 0.5, 60.0, grid)
    assert chini_residual(grid, h, M, MK, prefs, 0.5, window=(0.0, 40.0)) < 1e-9


def test_converged_residual(weak_solution):
    sol = weak_solution
    assert chini_residual(sol.grid, sol.h, M, MK, WEAK, 0.5, window=(0.0, 40.0)) < 1e-6
    assert chini_residual(sol.grid, sol.h, M, MK, WEAK, 0.5) < 1e-6


def test_residual_shrinks_at_fourth_order():
    # the 1-year step is only stable while lambda * dt stays moderate, hence T = 45
    res = []
    for n in (45, 90, 180, 360):
        s = rk4_chini(M, MK, WEAK, 0.5, 45.0, n)
        res.append(chini_residual(s.grid, s.h, M, MK, WEAK, 0.5, window=(0.0, 40.0)))
    ratios = [a / b for a, b in zip(res, res[1:])]
    assert all(8.0 < r < 32.0 for r in ratios)
    fine = rk4_chini(M, MK, WEAK, 0.5, 45.0, 45 * 64)
    assert chini_residual(fine.grid, fine.h, M, MK, WEAK, 0.5, window=(0.0, 40.0)) < res[0] * 64.0**-4 * 10


def test_consumption_band(weak_solution):
    t = np.linspace(0.0, 40.0, 401)
    c = weak_solution.c_star(t)
    assert np.all(c > 0) and np.all(c < 0.5)
    assert np.allclose(weak_solution.c_values, (0.5 * weak_solution.h) ** (1 / (0.5 - 1)), rtol=1e-12)


def test_terminal_horizon_insensitivity(weak_solution):
    longer = solve_chini(M, MK, WEAK, 0.5, horizon=70.0)
    t = np.linspace(0.0, 40.0, 161)
    assert np.max(np.abs(weak_solution.h_at(t) - longer.h_at(t))) < 1e-6


def test_interpolation_reproduces_nodes(weak_solution):
    sol = weak_solution
    assert np.allclose(sol.h_at(sol.grid[::7]), sol.h[::7], rtol=1e-12)
    mids = 0.5 * (sol.grid[:-1] + sol.grid[1:])[::9]
    fine = rk4_chini(M, MK, WEAK, 0.5, 60.0, 2 * (sol.grid.size - 1))
    assert np.allclose(sol.h_at(mids), fine.h_at(mids), rtol=1e-9)


def test_negative_gamma_branch():
    sol = solve_chini(M, MK, STRONG, 0.87)
    assert np.all(sol.h < 0)
    assert np.all(-3.0 * sol.h > 0)
    c = sol.c_star(np.linspace(0, 40, 81))
    assert np.all((c > 0) & (c < 1))
    assert sol.h[0] == pytest.approx(-9866.28, rel=1e-5)
    assert chini_residual(sol.grid, sol.h, M, MK, STRONG, 0.87, window=(0.0, 40.0)) < 1e-6 * abs(sol.h[0])


def test_terminal_condition():
    coef = ChiniCoefficients(M, MK, WEAK, 0.5)
    sol = rk4_chini(M, MK, WEAK, 0.5, 60.0, 960)
    assert sol.h[-1] == pytest.approx(coef.terminal_h(), rel=1e-12)
    assert coef.phi(10.0) == pytest.approx(2.0 / 0.5 * M.hazard(10.0) * 0.5**0.5)


def test_variable_rate_beats_constant_rate_in_value(weak_solution):
    const = pp.optimize(M, MK, WEAK, alpha=0.5)
    assert weak_solution.h[0] >= const.value


def test_coarse_step_crossing_reported():
    with pytest.raises(ChiniCrossingError) as info:
        solve_chini(M, MK, WEAK, 0.5, step=1.0, max_halvings=0)
    assert 50.0 < info.value.crossing_time < 60.0
    with pytest.raises(ChiniCrossingError):
        rk4_chini(M, MK, WEAK, 0.5, 60.0, 60)


def test_refinement_budget_reported():
    with pytest.raises(ConvergenceError):
        solve_chini(M, MK, WEAK, 0.5, tol=1e-30, max_halvings=2)


def test_input_checks():
    with pytest.raises(ValueError):
        solve_chini(M, MK, RetireePreferences.logarithmic(b=2.0), 0.5)
    with pytest.raises(ValueError):
        solve_chini(M, MK, WEAK, 1.0)
    with pytest.raises(ValueError):
        chini_residual(np.array([0.0, 1.0, 3.0, 4.0, 5.0]), np.ones(5), M, MK, WEAK, 0.5)


@pytest.mark.slow
def test_h0_matches_monte_carlo(weak_solution):
    om = merton_fraction(MK, WEAK)
    cfg = SimulationConfig(40_000, Policy(0.5, weak_solution.c_star, om), WEAK, dt=1 / 24, seed=5, horizon=60.0)
    est, se = mc_expected_utility(simulate_paths(M, MK, cfg), WEAK)
    assert abs(est - weak_solution.h[0]) < 3 * se
