import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tontine_bequest.errors import QuadratureError
from tontine_bequest.quadrature import adaptive_simpson, gauss_legendre_panels


def test_polynomial_exact():
    val, err = adaptive_simpson(lambda x: 3 * x**3 - x + 2, -1.0, 2.0)
    assert val == pytest.approx(3 * (16 - 1) / 4 - (4 - 1) / 2 + 6, abs=1e-12)
    assert err < 1e-12


@given(st.floats(0.1, 20.0))
def test_exponential_decay(rate):
    val, _ = adaptive_simpson(lambda x: np.exp(-rate * x), 0.0, 5.0, tol=1e-12)
    assert val == pytest.approx(-math.expm1(-5 * rate) / rate, abs=1e-11)


def test_sharp_peak_is_resolved():
    # narrow Gaussian off the initial nodes
    f = lambda x: np.exp(-((x - 0.3137) / 1e-3) ** 2)
    val, _ = adaptive_simpson(f, 0.0, 1.0, tol=1e-12)
    assert val == pytest.approx(math.sqrt(math.pi) * 1e-3, rel=1e-8)


def test_empty_and_reversed_interval():
    assert adaptive_simpson(np.sin, 1.0, 1.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        adaptive_simpson(np.sin, 1.0, 0.0)


def test_budget_exhaustion():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: np.sin(1e4 * x), 0.0, 10.0, tol=1e-14, max_subdivisions=50)


def test_non_finite_integrand():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: 1.0 / (x - 0.5), 0.0, 1.0, initial_panels=4)


def test_gauss_legendre_panels():
    x, w = gauss_legendre_panels(0.0, 3.0, 5, order=6)
    assert x.shape == w.shape == (30,)
    assert w.sum() == pytest.approx(3.0, abs=1e-14)
    assert np.dot(w, np.cos(x)) == pytest.approx(math.sin(3.0), abs=1e-13)
