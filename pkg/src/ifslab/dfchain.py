"""The Diaconis-Friedman chain on [0, 1] with a place-dependent weight p.

From x the chain jumps to a uniform point of [0, x] with probability p(x)
and of [x, 1] with probability q(x) = 1 - p(x). Its long-run behaviour is
decided by p(0) and q(1):

    p(0) < 1, q(1) < 1   AC_UNIQUE     unique invariant law with a density
    p(0) = 1, q(1) < 1   DIRAC_0       delta_0 is the unique invariant law
    p(0) < 1, q(1) = 1   DIRAC_1       delta_1 is the unique invariant law
    p(0) = 1, q(1) = 1   BOUNDARY_MIX  invariant laws (1-h) delta_0 + h delta_1

(the same split written via q(0) = 1 - p(0) and p(1) = 1 - q(1)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .grid import (GridFunction, _gauss_jacobi01, cumulative_cells, cumulative_integral,
                   grid, integrate_endpoint_singular, power_law_cells)
from .weights import WeightFunction

CASES = ("AC_UNIQUE", "DIRAC_0", "DIRAC_1", "BOUNDARY_MIX")
BOUNDARY_TOL = 1e-9


class RegimeError(ValueError):
    """Operation requested in a regime where it is undefined."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterate=None):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
        self.iterate = iterate


# -- transition operator and its adjoint -------------------------------------

def apply_Q(weight: WeightFunction, phi: GridFunction) -> GridFunction:
    """Q phi(x) = p(x)/x int_0^x phi + q(x)/(1-x) int_x^1 phi.

    At the endpoints: Q phi(0) = p(0) phi(0) + q(0) int phi and
    Q phi(1) = p(1) int phi + q(1) phi(1).
    """
    v = phi.values
    if not np.all(np.isfinite(v)):
        raise ValueError("Q acts on bounded functions; got non-finite values")
    x = phi.x
    F = cumulative_integral(phi).values
    total = F[-1]
    p = weight(x)
    out = np.empty_like(v)
    xi = x[1:-1]
    out[1:-1] = p[1:-1] / xi * F[1:-1] + (1.0 - p[1:-1]) / (1.0 - xi) * (total - F[1:-1])
    out[0] = p[0] * v[0] + (1.0 - p[0]) * total
    out[-1] = p[-1] * total + (1.0 - p[-1]) * v[-1]
    return GridFunction(out)


def apply_Q_adjoint(weight: WeightFunction, phi: GridFunction) -> GridFunction:
    """Q* phi(x) = int_0^x q(t)/(1-t) phi(t) dt + int_x^1 p(t)/t phi(t) dt.

    Cell integrals use power-law interpolation so that densities with
    integrable endpoint singularities are handled; values at 0 and 1 may be
    infinite and are only meaningful away from the endpoints.
    """
    x = phi.x
    v = phi.values
    p = weight(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_left = (1.0 - p) / (1.0 - x) * v
        g_right = p / x * v
    for g in (g_left, g_right):
        for k in (0, -1):
            if not np.isfinite(g[k]):
                g[k] = np.inf
    # a vanishing weight at the endpoint kills the singular factor
    if p[0] == 0.0 and np.isfinite(v[0]):
        g_right[0] = (p[1] / x[1]) * v[0]
    if p[-1] == 1.0 and np.isfinite(v[-1]):
        g_left[-1] = ((1.0 - p[-2]) / (1.0 - x[-2])) * v[-1]
    left = cumulative_cells(power_law_cells(g_left, x))
    right_cells = power_law_cells(g_right, x)
    right = np.concatenate((np.cumsum(right_cells[::-1])[::-1], [0.0]))
    with np.errstate(invalid="ignore"):
        return GridFunction(left + right)


# -- closed-form invariant density ------------------------------------------

@dataclass(frozen=True)
class InvariantDensity:
    """f_p(x) proportional to exp(int_x^{1/2} p(t)/t dt + int_{1/2}^x q(t)/(1-t) dt).

    Splitting p(t)/t = p(0)/t + (p(t) - p(0))/t (and likewise at 1) gives

        f_p(x) = (2x)^{-a} (2(1-x))^{-b} exp(r(x)) / C,   a = p(0), b = q(1),

    with r bounded; the power laws are exact and only r is integrated
    numerically.
    """

    weight: WeightFunction
    order: int = 16

    def __post_init__(self):
        a, b = self.a, self.b
        if a >= 1.0 - BOUNDARY_TOL or b >= 1.0 - BOUNDARY_TOL:
            raise RegimeError(
                f"density exists only if p(0) < 1 and q(1) < 1 (got p(0)={a:.12g}, q(1)={b:.12g}); "
                "otherwise the candidate density is not integrable"
            )

    @property
    def a(self) -> float:
        return self.weight.p0

    @property
    def b(self) -> float:
        return self.weight.q1

    def _slope_remainder(self, t):
        w = self.weight
        p = w(t)
        return (w(1.0) - p) / (1.0 - t) - (p - w(0.0)) / t

    def remainder(self, x) -> np.ndarray:
        """r(x) = int_{1/2}^x [(q(t) - q(1))/(1-t) - (p(t) - p(0))/t] dt."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if self.weight.kind in ("const", "identity", "one-minus-x"):
            # the bracket vanishes identically
            return np.zeros_like(x)
        bp = self.weight.breakpoints
        pts = np.unique(np.concatenate((flat, [0.5], bp)))
        nodes, wts = leggauss(self.order)
        lo, hi = pts[:-1], pts[1:]
        half = 0.5 * (hi - lo)
        t = (lo + hi)[:, None] * 0.5 + half[:, None] * nodes[None, :]
        cells = half * (self._slope_remainder(t) @ wts)
        cum = cumulative_cells(cells)
        cum -= cum[np.searchsorted(pts, 0.5)]
        return cum[np.searchsorted(pts, flat)].reshape(x.shape)

    def _smooth(self, x):
        """exp(r(x)) 2^{-a-b}: the density without its endpoint power laws."""
        return np.exp(self.remainder(x)) * 2.0 ** (-self.a - self.b)

    @cached_property
    def normalisation(self) -> float:
        return integrate_endpoint_singular(self._smooth, self.a, self.b,
                                           breakpoints=tuple(self.weight.breakpoints))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            power = x ** (-self.a) * (1.0 - x) ** (-self.b)
        return power * self._smooth(x) / self.normalisation

    def on_grid(self, n: int) -> GridFunction:
        return GridFunction(self.pdf(grid(n)))

    def expect(self, func) -> float:
        """int func(x) f_p(x) dx for a bounded callable func."""
        g = lambda x: func(x) * self._smooth(x)
        return integrate_endpoint_singular(g, self.a, self.b,
                                           breakpoints=tuple(self.weight.breakpoints)) / self.normalisation

    @cached_property
    def _cdf_tables(self):
        # F(x) = x^{1-a} S0(x) on [0, 1/2];  1 - F(x) = (1-x)^{1-b} S1(1-x) on [1/2, 1]
        s, w = _gauss_jacobi01(48, self.a, 0.0)
        s1, w1 = _gauss_jacobi01(48, self.b, 0.0)
        u = np.linspace(0.0, 0.5, 1025)
        C = self.normalisation
        t0 = u[:, None] * s[None, :]
        S0 = (w[None, :] * (1.0 - t0) ** (-self.b) * self._smooth(t0)).sum(axis=1) / C
        t1 = 1.0 - u[:, None] * s1[None, :]
        S1 = (w1[None, :] * t1 ** (-self.a) * self._smooth(t1)).sum(axis=1) / C
        return CubicSpline(u, S0), CubicSpline(u, S1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        S0, S1 = self._cdf_tables
        lo = np.minimum(x, 0.5)
        hi = np.minimum(1.0 - x, 0.5)
        out = np.where(x <= 0.5, lo ** (1.0 - self.a) * S0(lo), 1.0 - hi ** (1.0 - self.b) * S1(hi))
        return np.clip(out, 0.0, 1.0)


def closed_form_density(weight: WeightFunction, grid_size: int = 2000) -> GridFunction:
    """Invariant density on the grid; endpoint values are one-sided limits (possibly inf)."""
    return InvariantDensity(weight).on_grid(grid_size)


# -- regimes -----------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    p0: float
    q1: float
    case_id: str
    density: GridFunction | None = None
    h: GridFunction | None = None
    near_threshold: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def invariant(self) -> str:
        return {
            "AC_UNIQUE": "density",
            "DIRAC_0": "point-mass 0",
            "DIRAC_1": "point-mass 1",
            "BOUNDARY_MIX": "convex combinations (1-h) delta_0 + h delta_1",
        }[self.case_id]


def case_of(p0: float, q1: float, tolerance: float = BOUNDARY_TOL) -> str:
    at0 = p0 > 1.0 - tolerance
    at1 = q1 > 1.0 - tolerance
    return CASES[int(at0) + 2 * int(at1)]


def classify_regime(weight: WeightFunction, tolerance: float = BOUNDARY_TOL, grid_size: int = 2000,
                    solve: bool = True) -> RegimeReport:
    """Regime from (p(0), q(1)) plus a description of the invariant laws.

    With ``solve`` the density (AC_UNIQUE) or the harmonic function
    (BOUNDARY_MIX) is computed on a grid of ``grid_size``.
    """
    p0, q1 = weight.p0, weight.q1
    case = case_of(p0, q1, tolerance)
    # the regime jumps at p(0) = 1 and q(1) = 1; flag values close to either threshold
    near = any(0.0 < 1.0 - v < 1e3 * tolerance for v in (p0, q1))
    notes = []
    if near:
        notes.append("p(0) or q(1) lies within the boundary tolerance of 1: classification is "
                     "numerically sensitive")
    density = h = None
    if solve and case == "AC_UNIQUE":
        density = closed_form_density(weight, grid_size)
    elif solve and case == "BOUNDARY_MIX":
        h = solve_harmonic(weight, grid_size)
    return RegimeReport(p0, q1, case, density, h, near, tuple(notes))


def solve_harmonic(weight: WeightFunction, grid_size: int = 2000, max_iter: int = 100_000,
                   tol: float = 1e-10, omega: float = 1.0,
                   initial: GridFunction | None = None) -> GridFunction:
    """h with Qh = h, h(0) = 0, h(1) = 1: the probability of absorption at 1.

    Damped fixed-point sweeps h <- (1 - omega) h + omega Q h with the boundary
    values pinned after each sweep, started from h(x) = x unless ``initial``
    is given. Stops once sup |Qh - h| < tol.
    """
    case = case_of(weight.p0, weight.q1)
    if case != "BOUNDARY_MIX":
        raise RegimeError(f"harmonic absorption function needs p(0) = q(1) = 1 (regime {case})")
    if initial is None:
        h = grid(grid_size).copy()
    else:
        initial.check_grid(grid_size)
        h = np.array(initial.values, dtype=float)
    h[0], h[-1] = 0.0, 1.0
    res = np.inf
    for _ in range(max_iter):
        Qh = apply_Q(weight, GridFunction(h)).values
        res = float(np.max(np.abs(Qh - h)))
        if res < tol:
            return GridFunction(h)
        h = (1.0 - omega) * h + omega * Qh
        h[0], h[-1] = 0.0, 1.0
    raise ConvergenceError(f"harmonic iteration did not converge in {max_iter} sweeps", res,
                           GridFunction(h))


# -- distance-to-boundary drift for p(x) = 1 - x ------------------------------

def delta(x):
    """Distance to {0, 1}."""
    return np.minimum(x, 1.0 - np.asarray(x)) if np.ndim(x) else min(x, 1 - x)


def expected_delta_one_step(x):
    """E_x[Delta(Z_1)] for p(x) = 1 - x: (3x - 4x^2) / (4(1 - x)) on (0, 1/2].

    The right half follows from the symmetry x -> 1 - x. Accepts floats or
    Fractions (arithmetic stays exact for the latter).
    """
    if not 0 <= x <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x > 0.5:
        x = 1 - x
    if x == 0:
        return x * 0
    return (3 * x - 4 * x * x) / (4 * (1 - x))


@dataclass(frozen=True)
class DriftReport:
    x0: float
    mean_delta: np.ndarray
    stderr: np.ndarray
    fitted_rate: float
    fit_steps: np.ndarray
    theoretical_rate: float = 0.75

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.mean_delta.size)


def fit_geometric_rate(mean: np.ndarray, stderr: np.ndarray, min_snr: float = 10.0):
    """Least-squares rate exp(slope) of log(mean) against n, on steps with mean > min_snr * stderr."""
    n = np.arange(mean.size)
    use = (mean > 0) & (mean > min_snr * stderr)
    if use.sum() < 2:
        raise ValueError("fewer than two steps above the noise floor; cannot fit a rate")
    slope = np.polyfit(n[use], np.log(mean[use]), 1)[0]
    return float(np.exp(slope)), n[use]


def drift_decay(weight: WeightFunction | None = None, x0: float = 0.5, n_max: int = 20,
                n_chains: int = 10_000, seed: int = 0, threads: int = 1) -> DriftReport:
    """Monte Carlo E_{x0}[Delta(Z_n)] for n = 0..n_max and its fitted geometric rate."""
    from .mc import step_statistics

    if n_chains < 100:
        raise ValueError("drift_decay needs at least 100 chains")
    weight = weight or WeightFunction.one_minus_x()
    mean, se = step_statistics(weight, x0, n_max, n_chains, seed, delta, threads=threads)
    rate, used = fit_geometric_rate(mean, se)
    return DriftReport(x0, mean, se, rate, used)
