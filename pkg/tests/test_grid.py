import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from ifslab.grid import (GridFunction, GridMismatch, cumulative_integral, grid, holder_seminorm,
                         inner, integrate_endpoint_singular, power_law_cells)


def gf(func, n=1000):
    return GridFunction.from_callable(func, n)


def test_cumulative_integral_examples():
    F = cumulative_integral(gf(lambda x: 1.0))
    np.testing.assert_allclose(F.values, grid(1000), rtol=0, atol=1e-14)
    assert cumulative_integral(gf(lambda x: x)).values[-1] == pytest.approx(0.5, abs=1e-15)
    assert cumulative_integral(gf(lambda x: x**2)).values[-1] == pytest.approx(1 / 3, abs=1e-6)
    assert cumulative_integral(gf(lambda x: x)).values[0] == 0.0


def test_holder_examples():
    assert holder_seminorm(gf(lambda x: 3.0), 0.5) == 0.0
    assert holder_seminorm(gf(lambda x: x), 1.0) == pytest.approx(1.0, abs=1e-12)
    assert holder_seminorm(gf(np.sqrt), 0.5) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        holder_seminorm(gf(np.sqrt), 0.0)


@given(st.floats(0.1, 1.0), st.floats(-3, 3))
def test_holder_of_power_scaling(alpha, c):
    # m_alpha(c phi) = |c| m_alpha(phi)
    phi = gf(lambda x: np.sin(4 * x), 64)
    scaled = gf(lambda x: c * np.sin(4 * x), 64)
    assert holder_seminorm(scaled, alpha) == pytest.approx(abs(c) * holder_seminorm(phi, alpha), rel=1e-12, abs=1e-15)


def test_grid_function_validation():
    with pytest.raises(ValueError):
        GridFunction(np.zeros(10))
    bad = np.zeros(33)
    bad[5] = np.inf
    with pytest.raises(ValueError):
        GridFunction(bad)
    ok = np.ones(33)
    ok[0] = np.inf  # endpoint singularities are allowed
    GridFunction(ok)
    with pytest.raises(GridMismatch):
        inner(gf(np.sin, 32), gf(np.sin, 64))
    with pytest.raises(GridMismatch):
        gf(np.sin, 32) - gf(np.sin, 64)


def test_values_are_read_only():
    f = gf(np.sin, 32)
    with pytest.raises(ValueError):
        f.values[3] = 1.0


def test_interpolation_and_sup():
    f = gf(lambda x: x, 20)
    assert f(0.123) == pytest.approx(0.123)
    assert f.sup(0.0, 0.5) == pytest.approx(0.5)


def test_power_law_cells_exact_on_power_laws():
    n = 200
    x = grid(n)
    with np.errstate(divide="ignore"):
        g = x ** -0.4 * (1 - x) ** -0.7
    cells = power_law_cells(g, x)
    exact = beta_fn(0.6, 0.3)
    assert cells.sum() == pytest.approx(exact, rel=2e-3)
    # a pure power law on the left half is integrated exactly away from 1/2
    with np.errstate(divide="ignore"):
        left = power_law_cells(x ** -0.4, x)[1: n // 4]
    exact_left = (x[2: n // 4 + 1] ** 0.6 - x[1: n // 4] ** 0.6) / 0.6
    np.testing.assert_allclose(left, exact_left, rtol=1e-12)


@given(st.floats(0.0, 0.95), st.floats(0.0, 0.95))
def test_endpoint_singular_quadrature_matches_beta(a, b):
    val = integrate_endpoint_singular(lambda x: np.ones_like(x), a, b)
    assert val == pytest.approx(beta_fn(1 - a, 1 - b), rel=1e-9)


def test_endpoint_singular_with_smooth_factor_and_breakpoint():
    # int_0^1 x^-1/2 (1-x)^-1/2 |x - 0.3| dx against scipy quad with the algebraic weight
    from scipy.integrate import quad

    ref = quad(lambda x: abs(x - 0.3), 0, 1, weight="alg", wvar=(-0.5, -0.5), points=None, limit=200)[0]
    got = integrate_endpoint_singular(lambda x: np.abs(x - 0.3), 0.5, 0.5, breakpoints=(0.3,))
    assert got == pytest.approx(ref, rel=1e-10)
    with pytest.raises(ValueError):
        integrate_endpoint_singular(np.ones_like, 1.0, 0.0)
