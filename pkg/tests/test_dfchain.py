from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from ifslab.dfchain import (BOUNDARY_TOL, ConvergenceError, InvariantDensity, RegimeError, apply_Q,
                            apply_Q_adjoint, case_of, classify_regime, closed_form_density,
                            drift_decay, expected_delta_one_step, solve_harmonic)
from ifslab.grid import GridFunction, grid, inner
from ifslab.weights import WeightFunction

from conftest import BUILTIN, arcsine_pdf, weights

INTERIOR = (1e-3, 1 - 1e-3)


def gf(func, n=1000):
    return GridFunction.from_callable(func, n)


def interior_mask(n, lo=INTERIOR[0], hi=INTERIOR[1]):
    x = grid(n)
    return (x >= lo) & (x <= hi)


# -- Q -----------------------------------------------------------------------

def test_Q_preserves_constants(any_weight):
    np.testing.assert_allclose(apply_Q(any_weight, gf(lambda x: 1.0)).values, 1.0, rtol=0, atol=1e-12)


def test_Q_of_identity_under_half():
    out = apply_Q(WeightFunction.constant(0.5), gf(lambda x: x))
    np.testing.assert_allclose(out.values, grid(1000) / 2 + 0.25, rtol=0, atol=1e-13)


def test_Q_uniform_case_is_constant():
    phi = gf(lambda x: x**2, 1000)
    out = apply_Q(WeightFunction.identity(), phi).values
    # trapezoid value of int x^2 on N=1000
    trap = getattr(np, "trapezoid", getattr(np, "trapz", None))(phi.values, dx=1e-3)
    np.testing.assert_allclose(out, trap, rtol=0, atol=1e-13)


def test_Q_boundary_convention():
    w = WeightFunction.polynomial([0.3, 0.4])
    phi = gf(lambda x: np.cos(x))
    out = apply_Q(w, phi).values
    total = np.sin(1.0)
    assert out[0] == pytest.approx(0.3 * 1.0 + 0.7 * total, abs=1e-6)
    assert out[-1] == pytest.approx(0.7 * total + 0.3 * np.cos(1.0), abs=1e-6)


@given(weights(), st.lists(st.floats(-5, 5), min_size=3, max_size=6))
def test_Q_keeps_the_value_range(w, coeffs):
    phi = gf(lambda x: np.polynomial.polynomial.polyval(x, coeffs), 200)
    v = apply_Q(w, phi).values
    lo, hi = phi.values.min(), phi.values.max()
    assert np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)


@given(weights(), st.lists(st.floats(0, 5), min_size=1, max_size=5))
def test_Q_positivity(w, coeffs):
    phi = gf(lambda x: np.polynomial.polynomial.polyval(x, coeffs), 200)
    assert np.all(apply_Q(w, phi).values >= 0.0)


def test_Q_refinement_order():
    w = WeightFunction.polynomial([0.2, 0.6])

    def at(n):
        return apply_Q(w, gf(lambda x: x**2, n))

    a, b, c = at(250), at(500), at(1000)
    d1 = np.max(np.abs(a.values - b.values[::2]))
    d2 = np.max(np.abs(b.values - c.values[::2]))
    assert np.log2(d1 / d2) >= 1.9


def test_Q_rejects_non_finite():
    v = np.ones(33)
    v[0] = np.inf
    with pytest.raises(ValueError):
        apply_Q(WeightFunction.identity(), GridFunction(v))


# -- Q* ----------------------------------------------------------------------

def test_adjoint_of_one_under_half():
    out = apply_Q_adjoint(WeightFunction.constant(0.5), gf(lambda x: 1.0, 2000))
    x = grid(2000)
    m = interior_mask(2000)
    np.testing.assert_allclose(out.values[m], -0.5 * np.log(x[m] * (1 - x[m])), rtol=0, atol=1e-6)
    assert out.values[1000] == pytest.approx(np.log(2), abs=1e-6)


def test_adjoint_of_zero():
    assert np.all(apply_Q_adjoint(BUILTIN["poly:0.2,0.6"], gf(lambda x: 0.0)).values == 0.0)


@pytest.mark.parametrize("c", [0.3, 0.5, 0.7])
def test_beta_density_is_fixed(c):
    q = 1 - c
    beta = lambda x: x ** (q - 1) * (1 - x) ** (c - 1) / (gamma(c) * gamma(q))
    with np.errstate(divide="ignore"):
        f = gf(beta, 2000)
    res = (apply_Q_adjoint(WeightFunction.constant(c), f) - f).sup(*INTERIOR)
    assert res < 1e-3


@settings(max_examples=25)
@given(weights(), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_duality(w, b1, b2):
    n = 400
    phi = gf(lambda x: x * (1 - x) * (1 + b1 * np.cos(3 * x)), n)
    psi = gf(lambda x: 1 + b2 * x - x**2, n)
    lhs = inner(phi, apply_Q(w, psi))
    rhs = inner(apply_Q_adjoint(w, phi), psi)
    assert abs(lhs - rhs) < 0.5 / n**2


def test_duality_error_is_second_order():
    w = BUILTIN["poly:0.2,0.6"]
    errs = []
    for n in (200, 400, 800):
        phi = gf(lambda x: x * (1 - x) * (1 + np.cos(3 * x)), n)
        psi = gf(lambda x: np.exp(x) - 2 * x**2, n)
        errs.append(abs(inner(phi, apply_Q(w, psi)) - inner(apply_Q_adjoint(w, phi), psi)))
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


# -- density -----------------------------------------------------------------

def test_arcsine_density():
    f = closed_form_density(WeightFunction.constant(0.5), 2000)
    x = f.x
    m = (x >= 0.01) & (x <= 0.99)
    np.testing.assert_allclose(f.values[m], arcsine_pdf(x[m]), rtol=1e-10)
    assert np.isinf(f.values[0]) and np.isinf(f.values[-1])


@pytest.mark.parametrize("c", [0.3, 0.5, 0.7, 0.05, 0.95])
def test_beta_density(c):
    q = 1 - c
    d = InvariantDensity(WeightFunction.constant(c))
    x = np.linspace(0.01, 0.99, 99)
    np.testing.assert_allclose(d.pdf(x), x ** (q - 1) * (1 - x) ** (c - 1) / (gamma(c) * gamma(q)), rtol=1e-9)


def test_uniform_density():
    f = closed_form_density(WeightFunction.identity(), 500)
    np.testing.assert_allclose(f.values, 1.0, rtol=0, atol=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=20)
@given(weights(interior=True))
def test_density_normalised_against_scipy(w):
    d = InvariantDensity(w)
    f = lambda x: float(d.pdf(x))
    # adaptive QAGS on each half copes with the integrable endpoint power laws
    mass = quad(f, 0, 0.5, limit=500)[0] + quad(f, 0.5, 1, limit=500)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=20)
@given(weights(interior=True))
def test_density_ode(w):
    # f'/f = q/(1-x) - p/x, by central differences on the closed form
    d = InvariantDensity(w)
    x = np.linspace(1e-2, 1 - 1e-2, 41)
    h = 1e-5
    slope = (np.log(d.pdf(x + h)) - np.log(d.pdf(x - h))) / (2 * h)
    np.testing.assert_allclose(slope, w.q(x) / (1 - x) - w(x) / x, rtol=1e-6, atol=1e-6)


@settings(max_examples=10)
@given(weights(interior=True))
def test_stationarity_residual_shrinks(w):
    res = []
    # the sup sits next to a singular endpoint, so compare grids that both resolve 1e-3
    for n in (1000, 4000):
        f = closed_form_density(w, n)
        res.append((apply_Q_adjoint(w, f) - f).sup(*INTERIOR))
    assert res[1] < res[0] or res[1] < 1e-10


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_cdf_matches_density():
    d = InvariantDensity(BUILTIN["poly:0.2,0.6"])
    x = np.array([0.0, 0.01, 0.2, 0.5, 0.77, 1.0])
    ref = [quad(lambda t: d.pdf(t), 0, xi, limit=200)[0] if 0 < xi < 1 else float(xi) for xi in x]
    np.testing.assert_allclose(d.cdf(x), ref, atol=1e-7)


def test_density_rejects_boundary_regimes():
    for spec in ("1-x", "poly:1,0,-1"):
        with pytest.raises(RegimeError):
            closed_form_density(BUILTIN[spec], 100)
    with pytest.raises(RegimeError):
        InvariantDensity(WeightFunction.constant(1.0))


# -- regimes -----------------------------------------------------------------

@pytest.mark.parametrize("spec, case", [
    ("const:0.5", "AC_UNIQUE"), ("const:0.9", "AC_UNIQUE"), ("x", "AC_UNIQUE"),
    ("1-x", "BOUNDARY_MIX"), ("poly:1,0,-1", "BOUNDARY_MIX"),
])
def test_classify_examples(spec, case):
    rep = classify_regime(BUILTIN[spec], grid_size=400)
    assert rep.case_id == case
    if case == "AC_UNIQUE":
        assert rep.density is not None and rep.h is None
    else:
        assert rep.h.values[0] == 0.0 and rep.h.values[-1] == 1.0
        assert np.all((rep.h.values >= 0) & (rep.h.values <= 1))


def test_dirac_regimes():
    assert classify_regime(WeightFunction.constant(1.0)).case_id == "DIRAC_0"
    assert classify_regime(WeightFunction.constant(0.0)).case_id == "DIRAC_1"
    assert classify_regime(WeightFunction.polynomial([1.0, -0.5])).case_id == "DIRAC_0"


@given(weights())
def test_case_table(w):
    at0, at1 = w.p0 > 1 - BOUNDARY_TOL, w.q1 > 1 - BOUNDARY_TOL
    expected = {(False, False): "AC_UNIQUE", (True, False): "DIRAC_0",
                (False, True): "DIRAC_1", (True, True): "BOUNDARY_MIX"}[(at0, at1)]
    assert classify_regime(w, solve=False).case_id == expected


def test_near_threshold_is_flagged():
    rep = classify_regime(WeightFunction.constant(1 - 1e-8), solve=False)
    assert rep.case_id == "AC_UNIQUE" and rep.near_threshold and rep.notes
    rep = classify_regime(WeightFunction.constant(1 - 1e-10), solve=False)
    assert rep.case_id == "DIRAC_0" and rep.near_threshold
    assert not classify_regime(WeightFunction.constant(0.5), solve=False).near_threshold
    assert case_of(1.0, 0.2) == "DIRAC_0"


# -- harmonic function -------------------------------------------------------

def test_harmonic_one_minus_x():
    w = WeightFunction.one_minus_x()
    h = solve_harmonic(w, 2000)
    assert np.max(np.abs(h.values - h.x)) < 1e-3
    assert np.max(np.abs(apply_Q(w, h).values - h.values)) < 1e-8


def test_harmonic_two_starts_agree():
    w = BUILTIN["poly:1,0,-1"]
    a = solve_harmonic(w, 1000)
    b = solve_harmonic(w, 1000, initial=gf(lambda x: 0.0 * x))
    assert np.max(np.abs(a.values - b.values)) < 1e-8
    assert a.values[0] == 0.0 and a.values[-1] == 1.0
    assert np.all(np.diff(a.values) >= -1e-12)


def test_harmonic_damped_iteration_agrees():
    w = BUILTIN["poly:1,0,-1"]
    a = solve_harmonic(w, 500)
    b = solve_harmonic(w, 500, omega=0.7)
    assert np.max(np.abs(a.values - b.values)) < 1e-8


def test_harmonic_errors():
    with pytest.raises(RegimeError):
        solve_harmonic(WeightFunction.constant(0.5))
    with pytest.raises(ConvergenceError) as info:
        solve_harmonic(BUILTIN["poly:1,0,-1"], 200, max_iter=2)
    assert info.value.residual > 0 and info.value.iterate is not None


# -- drift -------------------------------------------------------------------

def test_expected_delta_examples():
    assert expected_delta_one_step(0.5) == 0.25
    assert expected_delta_one_step(Fraction(1, 4)) == Fraction(1, 6)
    assert expected_delta_one_step(1e-9) / 1e-9 == pytest.approx(0.75, rel=1e-8)
    assert expected_delta_one_step(0.0) == 0.0
    assert expected_delta_one_step(0.8) == pytest.approx(expected_delta_one_step(0.2))


@given(st.floats(1e-6, 0.5))
def test_expected_delta_envelope(x):
    assert expected_delta_one_step(x) <= 0.75 * x + 1e-15


@given(st.fractions(Fraction(1, 1000), Fraction(1, 2)))
def test_expected_delta_by_exact_integration(x):
    # E[Delta] = (1-x) * E[min(U x, 1 - U x)] + x * E[min(A, 1 - A)], computed piecewise
    # homothety: uniform on [0, x] with x <= 1/2, so Delta = y, mean x/2
    # affine: uniform on [x, 1]; mean of min(y, 1-y) over [x, 1]
    half = Fraction(1, 2)
    aff = ((half**2 - x**2) / 2 + (half**2) / 2) / (1 - x)
    exact = (1 - x) * x / 2 + x * aff
    assert expected_delta_one_step(x) == exact


def test_drift_decay_small():
    rep = drift_decay(x0=0.5, n_max=20, n_chains=10_000, seed=3)
    assert rep.mean_delta[0] == 0.5 and rep.stderr[0] == 0.0
    assert abs(rep.mean_delta[1] - 0.25) < 3 * rep.stderr[1]
    assert rep.fitted_rate <= 0.78
    with pytest.raises(ValueError):
        drift_decay(n_chains=50)
