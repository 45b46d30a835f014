"""Iterated function systems on [0, 1] with place-dependent mixture kernels.

The kernel at x is a two-component mixture: with probability p(x) apply a
map drawn from the first family, otherwise one drawn from the second. Each
family is parametrised by t ~ Uniform[0, 1]. The Diaconis-Friedman kernel
uses homotheties H_t(x) = t x and affine maps A_t(x) = t x + 1 - t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .weights import WeightFunction

MAP_KINDS = ("homothety", "affine", "pwl")


@dataclass(frozen=True)
class LipschitzMap:
    """A map [0, 1] -> [0, 1].

    For the built-in families ``t`` is the parameter; for ``pwl`` the map is the
    linear interpolation of ``(xs, ys)``.
    """

    kind: str
    t: float = 0.0
    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "pwl":
            xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
            if len(xs) < 2 or len(xs) != len(ys) or xs[0] != 0.0 or xs[-1] != 1.0:
                raise ValueError("pwl map needs matching knots covering 0 and 1")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("pwl knots must be strictly increasing")
            if ys.min() < 0.0 or ys.max() > 1.0:
                raise ValueError("pwl map must take values in [0, 1]")
        elif not 0.0 <= self.t <= 1.0:
            raise ValueError(f"family parameter t must lie in [0, 1], got {self.t}")

    def __call__(self, x):
        if self.kind == "homothety":
            y = self.t * np.asarray(x, float)
        elif self.kind == "affine":
            # t x + 1 - t written so that A_t(1) == 1 exactly and results stay in [0, 1]
            y = 1.0 - self.t * (1.0 - np.asarray(x, float))
        else:
            y = np.interp(x, self.xs, self.ys)
        return y if np.ndim(y) else float(y)

    @property
    def lipschitz(self) -> float:
        if self.kind == "pwl":
            return float(np.max(np.abs(np.diff(self.ys) / np.diff(self.xs))))
        return float(self.t)


def identity_map() -> LipschitzMap:
    return LipschitzMap("pwl", xs=(0.0, 1.0), ys=(0.0, 1.0))


@dataclass(frozen=True)
class MapFamily:
    """One mixture component: t -> map. A ``fixed`` map ignores t."""

    kind: str
    fixed: LipschitzMap | None = None

    def at(self, t: float) -> LipschitzMap:
        if self.fixed is not None:
            return self.fixed
        return LipschitzMap(self.kind, t=float(t))

    def apply(self, t, x):
        """Vectorised T_t(x) for arrays t, x of a common shape."""
        if self.kind == "homothety":
            return t * x
        if self.kind == "affine":
            return 1.0 - t * (1.0 - x)
        return np.broadcast_to(self.fixed(x), np.broadcast(t, x).shape)


HOMOTHETY = MapFamily("homothety")
AFFINE = MapFamily("affine")


@dataclass(frozen=True)
class PlaceDependentKernel:
    """mu_x = p(x) * law(first family) + q(x) * law(second family)."""

    weight: WeightFunction
    families: tuple[MapFamily, MapFamily] = (HOMOTHETY, AFFINE)

    @classmethod
    def diaconis_friedman(cls, weight: WeightFunction) -> "PlaceDependentKernel":
        return cls(weight)

    @property
    def is_diaconis_friedman(self) -> bool:
        return self.families == (HOMOTHETY, AFFINE)


def sample_kernel(kernel: PlaceDependentKernel, x: float, u: float, t: float) -> LipschitzMap:
    """Map selected from mu_x by the uniforms (u, t): first family iff u < p(x)."""
    first, second = kernel.families
    return first.at(t) if u < kernel.weight(x) else second.at(t)


def simulate_step(kernel: PlaceDependentKernel, x: float, u: float, t: float) -> float:
    return float(sample_kernel(kernel, x, u, t)(x))


def step_many(kernel: PlaceDependentKernel, x: np.ndarray, u: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Vectorised :func:`simulate_step` over chains."""
    first, second = kernel.families
    pick = u < kernel.weight(x)
    return np.where(pick, first.apply(t, x), second.apply(t, x))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _pairs(grid_size: int):
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = np.linspace(0.0, 1.0, grid_size)
    i, j = np.triu_indices(grid_size, k=1)
    return x[i], x[j]


def estimate_contraction_r(kernel: PlaceDependentKernel, alpha: float, grid_size: int = 201,
                           n_nodes: int = 64) -> float:
    """Contraction-in-mean coefficient

        r = sup_{x != y} E_{T ~ mu_x} (|T(x) - T(y)| / |x - y|)^alpha

    over all pairs of a uniform grid, with Gauss-Legendre quadrature in t.
    A grid sup only bounds the true sup from below.
    """
    _check_alpha(alpha)
    xs, ys = _pairs(grid_size)
    nodes, wts = leggauss(n_nodes)
    t = 0.5 * (nodes + 1.0)
    wts = 0.5 * wts
    dist = ys - xs
    p = kernel.weight(xs)
    total = np.zeros_like(xs)
    for family, mass in zip(kernel.families, (p, 1.0 - p)):
        tx = family.apply(t[:, None], xs[None, :])
        ty = family.apply(t[:, None], ys[None, :])
        ratio = np.abs(tx - ty) / dist[None, :]
        total += mass * (wts @ ratio**alpha)
    return float(total.max())


def estimate_R_alpha(weight: WeightFunction, alpha: float, grid_size: int = 201) -> float:
    """Hölder constant of x -> mu_x in total variation for the DF kernel.

    The homothety and affine component laws are mutually singular, so
    |mu_x - mu_y|_TV = 2 |p(x) - p(y)|.
    """
    _check_alpha(alpha)
    xs, ys = _pairs(grid_size)
    return float(np.max(2.0 * np.abs(weight(xs) - weight(ys)) / (ys - xs) ** alpha))


@dataclass(frozen=True)
class Minorization:
    delta: float
    side: str  # "homothety" | "affine" | "none"
    witness_found: bool


def check_minorization(weight: WeightFunction, grid_size: int = 201) -> Minorization:
    """Largest uniform minorant mu_x >= delta * mu with mu a single family law.

    delta_H = inf p pairs with mu = law of H_t, delta_A = inf q with A_t; ties go
    to the homothety side. A positive delta puts a constant map (H_0 = 0 or
    A_0 = 1) in the support of mu, which is itself a contracting sequence.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = np.linspace(0.0, 1.0, grid_size)
    p = weight(x)
    d_h, d_a = float(p.min()), float((1.0 - p).min())
    if d_h >= d_a:
        delta, side = d_h, "homothety"
    else:
        delta, side = d_a, "affine"
    if delta <= 0.0:
        return Minorization(0.0, "none", False)
    return Minorization(delta, side, True)


@dataclass(frozen=True)
class HypothesisReport:
    alpha: float
    r_estimate: float
    R_alpha_estimate: float
    delta: float
    minorant_side: str
    witness_found: bool
    h1: bool
    h2: bool
    h3: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "r": self.r_estimate,
            "R_alpha": self.R_alpha_estimate,
            "delta": self.delta,
            "minorant_side": self.minorant_side,
            "witness_found": self.witness_found,
            "H1": "PASS" if self.h1 else "FAIL",
            "H2": "PASS" if self.h2 else "FAIL",
            "H3": "PASS" if self.h3 else "FAIL",
            "note": self.note,
        }


def verify_hypotheses(weight: WeightFunction, alpha: float = 1.0, grid_size: int = 201) -> HypothesisReport:
    """Evaluate the three sufficient conditions for a unique invariant law."""
    # local import: dfchain depends on this module
    from .dfchain import classify_regime

    kernel = PlaceDependentKernel.diaconis_friedman(weight)
    r = estimate_contraction_r(kernel, alpha, grid_size)
    R = estimate_R_alpha(weight, alpha, grid_size)
    mino = check_minorization(weight, grid_size)
    h1, h2, h3 = r < 1.0, bool(np.isfinite(R)), mino.witness_found
    note = ""
    if not (h1 and h2 and h3):
        case = classify_regime(weight, solve=False).case_id
        if case != "BOUNDARY_MIX":
            note = (f"uniqueness still holds (regime {case}): the hypotheses are "
                    "sufficient, not necessary")
        else:
            note = "regime BOUNDARY_MIX: invariant law is not unique"
    return HypothesisReport(alpha, r, R, mino.delta, mino.side, mino.witness_found, h1, h2, h3, note)
