"""Weight functions p: [0, 1] -> [0, 1] selecting the homothety family.

A weight is written as a short text spec:

    const:<c>          p(x) = c
    x                  p(x) = x
    1-x                p(x) = 1 - x
    poly:c0,c1,...     p(x) = c0 + c1 x + c2 x^2 + ...
    pwl:<file.csv>     piecewise-linear interpolation of a CSV with columns x,p

The complementary weight q = 1 - p is always derived, never stored.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

KINDS = ("const", "identity", "one-minus-x", "poly", "pwl")

# points used to check 0 <= p <= 1 at construction
_CHECK_POINTS = 10_001
_RANGE_SLACK = 1e-12


class WeightError(ValueError):
    """Malformed weight spec or a weight leaving [0, 1]."""


@dataclass(frozen=True)
class WeightFunction:
    kind: str
    coeffs: tuple[float, ...] = ()
    knots: tuple[tuple[float, float], ...] = ()
    alpha: float = 1.0
    spec: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WeightError(f"unknown weight kind {self.kind!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise WeightError(f"Hölder exponent must lie in (0, 1], got {self.alpha}")
        if self.kind in ("const", "poly") and not self.coeffs:
            raise WeightError(f"{self.kind} weight needs coefficients")
        if self.kind == "pwl":
            xs = np.array([k[0] for k in self.knots])
            if len(xs) < 2 or xs[0] != 0.0 or xs[-1] != 1.0:
                raise WeightError("pwl table must cover x = 0 and x = 1")
            if np.any(np.diff(xs) <= 0):
                raise WeightError("pwl table must be sorted by strictly increasing x")
        xs = np.union1d(np.linspace(0.0, 1.0, _CHECK_POINTS), self.breakpoints)
        vals = self._raw(xs)
        if not np.all(np.isfinite(vals)):
            raise WeightError(f"weight {self.label} is not finite on [0, 1]")
        if vals.min() < -_RANGE_SLACK or vals.max() > 1.0 + _RANGE_SLACK:
            raise WeightError(
                f"weight {self.label} leaves [0, 1]: range [{vals.min():.6g}, {vals.max():.6g}]"
            )

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "WeightFunction":
        return cls("const", coeffs=(float(c),), spec=f"const:{_fmt(c)}")

    @classmethod
    def identity(cls) -> "WeightFunction":
        return cls("identity", spec="x")

    @classmethod
    def one_minus_x(cls) -> "WeightFunction":
        return cls("one-minus-x", spec="1-x")

    @classmethod
    def polynomial(cls, coeffs) -> "WeightFunction":
        coeffs = tuple(float(c) for c in coeffs)
        return cls("poly", coeffs=coeffs, spec="poly:" + ",".join(_fmt(c) for c in coeffs))

    @classmethod
    def piecewise_linear(cls, xs, ps, spec: str = "") -> "WeightFunction":
        knots = tuple((float(a), float(b)) for a, b in zip(xs, ps))
        return cls("pwl", knots=knots, spec=spec or "pwl:<inline>")

    # -- evaluation ---------------------------------------------------------
    def _raw(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full_like(x, self.coeffs[0])
        if self.kind == "identity":
            return x.copy()
        if self.kind == "one-minus-x":
            return 1.0 - x
        if self.kind == "poly":
            return P.polyval(x, self.coeffs)
        kx, kp = zip(*self.knots)
        return np.interp(x, kx, kp)

    def __call__(self, x):
        """p(x), clipped to [0, 1] to absorb round-off in polynomial evaluation."""
        out = np.clip(self._raw(x), 0.0, 1.0)
        return out if out.ndim else float(out)

    def q(self, x):
        """Complementary weight 1 - p(x)."""
        return 1.0 - self(x)

    @property
    def p0(self) -> float:
        return float(self(0.0))

    @property
    def q1(self) -> float:
        return 1.0 - float(self(1.0))

    @property
    def breakpoints(self) -> np.ndarray:
        """Interior points where p may fail to be smooth."""
        if self.kind != "pwl":
            return np.empty(0)
        xs = np.array([k[0] for k in self.knots])
        return xs[(xs > 0.0) & (xs < 1.0)]

    @property
    def label(self) -> str:
        return self.spec or self.kind

    def __str__(self):
        return self.label


def _fmt(v: float) -> str:
    return repr(float(v))


def parse_weight(text: str, alpha: float = 1.0, base_dir: str | Path | None = None) -> WeightFunction:
    """Parse a weight spec string (see module docstring)."""
    text = text.strip()
    try:
        if text == "x":
            w = WeightFunction("identity", alpha=alpha, spec=text)
        elif text == "1-x":
            w = WeightFunction("one-minus-x", alpha=alpha, spec=text)
        elif text.startswith("const:"):
            w = WeightFunction("const", coeffs=(float(text[6:]),), alpha=alpha, spec=text)
        elif text.startswith("poly:"):
            coeffs = tuple(float(c) for c in text[5:].split(","))
            w = WeightFunction("poly", coeffs=coeffs, alpha=alpha, spec=text)
        elif text.startswith("pwl:"):
            path = Path(text[4:])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            w = WeightFunction("pwl", knots=_read_pwl(path), alpha=alpha, spec=text)
        else:
            raise WeightError(f"unrecognised weight spec {text!r}")
    except (ValueError, OSError) as exc:
        if isinstance(exc, WeightError):
            raise
        raise WeightError(f"cannot parse weight spec {text!r}: {exc}") from exc
    return w


def _read_pwl(path: Path) -> tuple[tuple[float, float], ...]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "p"} <= set(reader.fieldnames):
            raise WeightError(f"{path}: expected CSV columns x,p")
        return tuple((float(row["x"]), float(row["p"])) for row in reader)
