"""Ulam discretisation of the chain, stationary vectors and spectral gaps."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dfchain import (ConvergenceError, InvariantDensity, apply_Q, case_of, classify_regime,
                      solve_harmonic)
from .grid import GridFunction
from .weights import WeightFunction

FIT_WINDOW = 20


class SpectralWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class UlamMatrix:
    """M[i, j] = probability of moving from the midpoint of cell i into cell j."""

    matrix: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.matrix.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def nonzero(self):
        i, j = np.nonzero(self.matrix)
        return i, j, self.matrix[i, j]


def interval_probability(weight: WeightFunction, x, lo, hi):
    """P(next state in [lo, hi] | current state x), in closed form.

    From x the next state is uniform on [0, x] with probability p(x) and
    uniform on [x, 1] with probability q(x). At x = 0 (x = 1) the first
    (second) component is the point mass at x itself.
    """
    x, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, lo, hi)))
    p = weight(x)
    below = np.clip(np.minimum(hi, x) - lo, 0.0, None)
    above = np.clip(hi - np.maximum(lo, x), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(x > 0, below / x, (lo <= 0.0).astype(float))
        second = np.where(x < 1, above / (1.0 - x), (hi >= 1.0).astype(float))
    return p * first + (1.0 - p) * second


def build_ulam(weight: WeightFunction, n_cells: int) -> UlamMatrix:
    """Exact cell-to-cell transition probabilities from each cell midpoint."""
    if n_cells < 8:
        raise ValueError("n_cells must be at least 8")
    e = np.linspace(0.0, 1.0, n_cells + 1)
    mid = 0.5 * (e[:-1] + e[1:])
    return UlamMatrix(interval_probability(weight, mid[:, None], e[None, :-1], e[None, 1:]))


def power_iteration(M: UlamMatrix, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Left fixed vector pi M = pi (l1 change below tol), from the uniform vector."""
    A = M.matrix
    pi = np.full(M.n_cells, 1.0 / M.n_cells)
    change = np.inf
    for _ in range(max_iter):
        nxt = pi @ A
        nxt /= nxt.sum()
        change = float(np.abs(nxt - pi).sum())
        pi = nxt
        if change < tol:
            return pi
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps; two invariant directions "
        "(mass drifting between the boundary cells) are the usual cause",
        change, pi)


def _projector(left: np.ndarray, right: np.ndarray):
    """v -> v - R (L^T R)^{-1} L^T v for column stacks L, R."""
    G = np.linalg.inv(left.T @ right)

    def project(v):
        return v - right @ (G @ (left.T @ v))

    return project


def second_eigenvalue(M: UlamMatrix, pi: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000,
                      extra_left: np.ndarray | None = None, extra_right: np.ndarray | None = None,
                      return_info: bool = False):
    """Modulus of the dominant eigenvalue of M on {v : pi . v = 0}.

    Deflated power iteration on right vectors: multiply, then project out the
    constant direction along pi. ``extra_left``/``extra_right`` deflate one
    more invariant pair (used when the chain has two invariant laws). If the
    norm ratio does not settle (complex pair), the rate is taken from a
    log-linear fit of the last iterate norms and a SpectralWarning is issued.
    """
    n = M.n_cells
    A = M.matrix
    L = pi[:, None]
    R = np.ones((n, 1))
    if extra_left is not None:
        L = np.column_stack((L, extra_left))
        R = np.column_stack((R, extra_right))
    project = _projector(L, R)
    v = project(np.random.default_rng(12345).standard_normal(n))
    v /= np.linalg.norm(v)
    log_norms = [0.0]
    lam_prev = np.nan
    converged = False
    for _ in range(max_iter):
        w = project(A @ v)
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            lam_prev, converged = 0.0, True
            log_norms.append(-np.inf)
            break
        lam = norm
        log_norms.append(log_norms[-1] + np.log(norm))
        v = w / norm
        if abs(lam - lam_prev) < tol * max(1.0, lam):
            lam_prev, converged = lam, True
            break
        lam_prev = lam
    fit = _decay_fit(np.array(log_norms))
    info = {"converged": converged, "decay_fit": fit, "iterations": len(log_norms) - 1}
    value = float(lam_prev)
    if not converged:
        warnings.warn("deflated power iteration did not settle; using the decay-rate fit",
                      SpectralWarning, stacklevel=2)
        value = fit
    value = min(max(value, 0.0), 1.0)
    return (value, info) if return_info else value


def _decay_fit(log_norms: np.ndarray) -> float:
    """Geometric rate from a log-linear fit over the last FIT_WINDOW iterate norms."""
    finite = log_norms[np.isfinite(log_norms)]
    if finite.size < log_norms.size:
        return 0.0
    tail = finite[-(FIT_WINDOW + 1):]
    if tail.size < 2:
        return float("nan")
    slope = np.polyfit(np.arange(tail.size), tail, 1)[0]
    return float(np.exp(slope))


@dataclass(frozen=True)
class SpectrumEstimate:
    n_cells: int
    stationary: np.ndarray
    lambda2: float
    decay_fit: float
    case_id: str
    lambda2_two_sided: float | None = None
    flags: tuple[str, ...] = field(default=())


def estimate_spectrum(weight: WeightFunction, n_cells: int = 1000, tol: float = 1e-10,
                      max_iter: int = 100_000) -> SpectrumEstimate:
    """Stationary cell masses and second eigenvalue of the Ulam matrix.

    In the two-absorbing-point regime the single deflation leaves a second
    eigenvalue close to 1; that value is flagged and a second estimate is
    made after also deflating the pair (boundary cells, absorption function h).
    """
    M = build_ulam(weight, n_cells)
    case = case_of(weight.p0, weight.q1)
    flags = []
    try:
        pi = power_iteration(M, tol, max_iter)
    except ConvergenceError as exc:
        pi = exc.iterate
        flags.append("stationary vector not converged")
    lam, info = second_eigenvalue(M, pi, tol, return_info=True)
    if not info["converged"]:
        flags.append("complex-pair fallback: lambda2 from decay fit")
    two_sided = None
    if case == "BOUNDARY_MIX":
        flags.append("degenerate: two invariant laws, lambda2 from single deflation is ~1")
        hm = solve_harmonic(weight, 2000)(M.midpoints)
        first, last = np.zeros(n_cells), np.zeros(n_cells)
        first[0] = last[-1] = 1.0
        two_sided = second_eigenvalue(M, first, tol, extra_left=last, extra_right=hm)
    return SpectrumEstimate(n_cells, pi, lam, info["decay_fit"], case, two_sided, tuple(flags))


def cell_masses(density: InvariantDensity, n_cells: int) -> np.ndarray:
    """Exact (up to CDF accuracy) invariant mass of each Ulam cell."""
    return np.diff(density.cdf(np.linspace(0.0, 1.0, n_cells + 1)))


def limit_values(weight: WeightFunction, phi: GridFunction) -> np.ndarray:
    """Pointwise limit of Q^n phi on the grid, by regime."""
    report = classify_regime(weight, solve=False)
    v = phi.values
    if report.case_id == "AC_UNIQUE":
        nu = InvariantDensity(weight).expect(phi)
        return np.full_like(v, nu)
    if report.case_id == "DIRAC_0":
        return np.full_like(v, v[0])
    if report.case_id == "DIRAC_1":
        return np.full_like(v, v[-1])
    h = solve_harmonic(weight, phi.n).values
    return (1.0 - h) * v[0] + h * v[-1]


def convergence_curve(weight: WeightFunction, phi: GridFunction, n_steps: int) -> np.ndarray:
    """sup_x |Q^n phi(x) - limit(x)| for n = 0..n_steps."""
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    limit = limit_values(weight, phi)
    out = np.empty(n_steps + 1)
    cur = phi
    for n in range(n_steps + 1):
        if n:
            cur = apply_Q(weight, cur)
        out[n] = np.max(np.abs(cur.values - limit))
    return out
