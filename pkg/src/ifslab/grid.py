"""Grid functions on [0, 1] and the quadrature rules used by the operators.

Functions live on the uniform grid x_i = i/N, i = 0..N. Densities may blow
up at 0 and 1 (arcsine law), so the two endpoint values are allowed to be
infinite; interior values must be finite.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MIN_GRID = 16


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size - 1 < MIN_GRID:
            raise ValueError(f"grid function needs N >= {MIN_GRID} (got {v.size - 1})")
        if not np.all(np.isfinite(v[1:-1])):
            raise ValueError("interior values of a grid function must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, func, n: int) -> "GridFunction":
        return cls(np.asarray(func(grid(n)), dtype=float) * np.ones(n + 1))

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return grid(self.n)

    def __call__(self, x):
        """Linear interpolation between grid values."""
        return np.interp(x, self.x, self.values)

    def check_grid(self, other: "GridFunction | int") -> None:
        n = other if isinstance(other, int) else other.n
        if n != self.n:
            raise GridMismatch(f"grid size {self.n} does not match {n}")

    def sup(self, lo: float = 0.0, hi: float = 1.0) -> float:
        x = self.x
        mask = (x >= lo - 1e-15) & (x <= hi + 1e-15)
        return float(np.max(np.abs(self.values[mask])))

    def __sub__(self, other):
        other_v = other.values if isinstance(other, GridFunction) else other
        if isinstance(other, GridFunction):
            self.check_grid(other)
        # inf - inf at a singular endpoint gives nan there; interiors stay finite
        with np.errstate(invalid="ignore"):
            return GridFunction(self.values - other_v)

    def __repr__(self):
        return f"GridFunction(N={self.n})"


@lru_cache(maxsize=32)
def _grid(n: int) -> np.ndarray:
    x = np.arange(n + 1) / n
    x.setflags(write=False)
    return x


def grid(n: int) -> np.ndarray:
    return _grid(int(n))


def cumulative_integral(phi: GridFunction) -> GridFunction:
    """Cumulative trapezoid F(x_i) = int_0^{x_i} phi, F(0) = 0."""
    v = phi.values
    h = 1.0 / phi.n
    return GridFunction(np.concatenate(([0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1])))))


def inner(phi: GridFunction, psi: GridFunction) -> float:
    """Trapezoid inner product on the grid."""
    phi.check_grid(psi)
    w = np.full(phi.n + 1, 1.0 / phi.n)
    w[[0, -1]] *= 0.5
    return float(np.sum(w * phi.values * psi.values))


def holder_seminorm(phi: GridFunction, alpha: float) -> float:
    """sup over grid pairs of |phi(x_i) - phi(x_j)| / |x_i - x_j|^alpha."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    v, x = phi.values, phi.x
    best = 0.0
    # row blocks keep memory at O(N * block)
    for start in range(0, v.size, 256):
        stop = min(start + 256, v.size)
        dv = np.abs(v[start:stop, None] - v[None, :])
        dx = np.abs(x[start:stop, None] - x[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dx > 0, dv / dx**alpha, 0.0)
        best = max(best, float(ratio.max()))
    return best


# -- cell integrals ---------------------------------------------------------

def power_law_cells(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Integrals of g over the cells [x_i, x_{i+1}] of a uniform grid.

    On cells in the left half, g is interpolated as c * t^beta; in the right
    half as c * (1 - t)^beta. This is exact for the power laws a density of
    the chain exhibits at the endpoints, and second order on smooth positive
    data. Cells whose endpoint values change sign or vanish fall back to the
    trapezoid rule. An infinite endpoint value is replaced by the power law
    extrapolated from the two neighbouring cells; the result is +inf when
    that exponent is not integrable.
    """
    g = np.asarray(g, dtype=float)
    n = g.size - 1
    out = np.empty(n)
    a, b = g[:-1], g[1:]
    left, right = x[:-1], x[1:]
    mid = 0.5 * (left + right)
    finite = np.isfinite(a) & np.isfinite(b)
    with np.errstate(invalid="ignore"):
        same_sign = finite & (a * b > 0)

    # distance variable s: t near 0, 1 - t near 1
    lo_half = mid <= 0.5
    s_a = np.where(lo_half, left, 1.0 - left)
    s_b = np.where(lo_half, right, 1.0 - right)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.log(b / a) / np.log(s_b / s_a)
        ok = same_sign & (s_a > 0) & (s_b > 0) & np.isfinite(beta)
        e = beta + 1.0
        near_log = np.abs(e) < 1e-8
        # int over the cell of a * (s/s_a)^beta ds, orientation handled by abs(ds)
        pw = np.where(
            near_log,
            a * s_a * np.log(s_b / s_a),
            a * s_a / e * ((s_b / s_a) ** e - 1.0),
        )
        pw = np.abs(pw) * np.sign(a)
    trap = 0.5 * (a + b) * (right - left)
    out = np.where(ok, pw, trap)

    h = 1.0 / n
    if not np.isfinite(g[0]):
        out[0] = _singular_end_cell(g[[1, 2, 4]], h)
    if not np.isfinite(g[-1]):
        out[-1] = _singular_end_cell(g[[-2, -3, -5]], h)
    return out


def _singular_end_cell(g: np.ndarray, h: float) -> float:
    """int_0^h of c s^beta (1 + gamma s) fitted through s = h, 2h, 4h."""
    if not np.all(np.isfinite(g)) or not (np.all(g > 0) or np.all(g < 0)):
        return float(g[0] * h)
    s = np.array([h, 2 * h, 4 * h])
    lc, beta, gamma = np.linalg.solve(np.column_stack((np.ones(3), np.log(s), s)), np.log(np.abs(g)))
    if beta <= -1.0:
        return float(np.inf * np.sign(g[0]))
    val = np.exp(lc) * (h ** (beta + 1) / (beta + 1) + gamma * h ** (beta + 2) / (beta + 2))
    return float(np.sign(g[0]) * val)


def cumulative_cells(cells: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(cells)))


# -- singular-weight quadrature on [0, 1] ------------------------------------

@lru_cache(maxsize=64)
def _gauss_jacobi01(order: int, a: float, b: float):
    """Nodes/weights for int_0^1 x^(-a) (1-x)^(-b) g(x) dx."""
    s, w = roots_jacobi(order, -b, -a)
    # x = (1 + s)/2 maps weight (1-s)^(-b)(1+s)^(-a) to 2^(a+b) x^(-a)(1-x)^(-b)
    scale = 2.0 ** (a + b - 1.0)
    return 0.5 * (1.0 + s), w * scale


@lru_cache(maxsize=8)
def _gauss_legendre01(order: int):
    s, w = leggauss(order)
    return 0.5 * (1.0 + s), 0.5 * w


def integrate_endpoint_singular(g, a: float, b: float, breakpoints=(), n_panels: int = 64,
                                order: int = 20) -> float:
    """int_0^1 x^(-a) (1 - x)^(-b) g(x) dx for a, b < 1 and g bounded.

    The end panels use Gauss-Jacobi rules carrying the power weight; interior
    panels (geometrically graded towards both ends, plus any breakpoints of g)
    use Gauss-Legendre with the power weight evaluated directly.
    """
    if a >= 1.0 or b >= 1.0:
        raise ValueError("x^-a (1-x)^-b is not integrable for a >= 1 or b >= 1")
    edges = _panel_edges(n_panels, breakpoints)
    total = 0.0
    xg, wg = _gauss_legendre01(order)
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        width = hi - lo
        if k == 0:
            # x in [0, hi]: x^-a = hi^-a * s^-a with s = x/hi
            s, w = _gauss_jacobi01(order, a, 0.0)
            x = hi * s
            total += hi ** (1.0 - a) * np.sum(w * (1.0 - x) ** (-b) * g(x))
        elif k == len(edges) - 2:
            s, w = _gauss_jacobi01(order, 0.0, b)
            x = lo + width * s
            total += width ** (1.0 - b) * np.sum(w * x ** (-a) * g(x))
        else:
            x = lo + width * xg
            total += width * np.sum(wg * x ** (-a) * (1.0 - x) ** (-b) * g(x))
    return float(total)


def _panel_edges(n_panels: int, breakpoints=()) -> np.ndarray:
    half = max(n_panels // 2, 2)
    # graded to 1e-6 at each end, uniform-ish in the middle
    left = np.concatenate(([0.0], np.geomspace(1e-6, 0.5, half)))
    edges = np.union1d(left, 1.0 - left)
    edges = np.union1d(edges, np.linspace(0.0, 1.0, n_panels + 1))
    bp = np.asarray(list(breakpoints), dtype=float)
    edges = np.union1d(edges, bp[(bp > 0) & (bp < 1)])
    # drop slivers
    keep = np.concatenate(([True], np.diff(edges) > 1e-14))
    return edges[keep]
