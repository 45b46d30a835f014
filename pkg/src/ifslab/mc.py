"""Seeded Monte Carlo for the Diaconis-Friedman chain.

RNG contract: numpy's Philox4x64 counter-based generator, keyed through
``SeedSequence``. Chains are grouped in fixed blocks of ``BLOCK`` chains and
block k draws from ``SeedSequence(seed).spawn(n_blocks)[k]``, so every
chain's randomness depends only on (seed, chain index) and never on how
blocks are spread over worker threads. Per-block tallies are merged in block
order, which makes every summary bit-identical for any thread count.

Within a block each step draws the family uniforms u for all chains, then
the parameters t (two-draw sampler), or a single uniform per chain for the
inverse-CDF sampler.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstwobign

from .grid import GridFunction
from .ifs import PlaceDependentKernel, simulate_step, step_many
from .weights import WeightFunction

BLOCK = 1024
RNG_NAME = "numpy.random.Philox (4x64, SeedSequence-keyed), block size 1024, v1"
SAMPLERS = ("two-draw", "inverse-cdf")
RAW_KS_LIMIT = 1_000_000


def make_rng(seed) -> np.random.Generator:
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seq))


def _block_sizes(n_chains: int) -> list[int]:
    full, rest = divmod(n_chains, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _map_blocks(work, n_chains: int, seed: int, threads: int = 1) -> list:
    """Run work(block_index, size, rng) for each block; results in block order."""
    sizes = _block_sizes(n_chains)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(k, size, make_rng(seq)) for k, (size, seq) in enumerate(zip(sizes, seqs))]
    if threads <= 1 or len(jobs) == 1:
        return [work(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


def _advance(kernel: PlaceDependentKernel, x: np.ndarray, rng: np.random.Generator,
             sampler: str) -> np.ndarray:
    if sampler == "two-draw":
        u = rng.random(x.size)
        t = rng.random(x.size)
        return step_many(kernel, x, u, t)
    # inverse CDF of the one-step law: F_x(y) = p y/x on [0, x], p + q (y - x)/(1 - x) above
    v = rng.random(x.size)
    p = kernel.weight(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = x * (v / p)
        high = 1.0 - (1.0 - x) * ((1.0 - v) / (1.0 - p))
    return np.clip(np.where(v < p, low, high), 0.0, 1.0)


def _check_sampler(sampler: str) -> None:
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")


# -- trajectories ------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    seed: int
    x0: float
    states: np.ndarray
    choices: np.ndarray  # (n_steps, 2): recorded (u, t)


def simulate_trajectory(weight: WeightFunction, x0: float, n_steps: int, seed: int) -> Trajectory:
    """One chain Z_0..Z_n driven by the stream of ``seed``; (u, t) recorded per step."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    rng = make_rng(seed)
    choices = rng.random((n_steps, 2))
    return Trajectory(seed, x0, replay_choices(weight, x0, choices), choices)


def replay_choices(weight: WeightFunction, x0: float, choices: np.ndarray) -> np.ndarray:
    kernel = PlaceDependentKernel.diaconis_friedman(weight)
    states = np.empty(len(choices) + 1)
    states[0] = x = x0
    for n, (u, t) in enumerate(choices, start=1):
        x = simulate_step(kernel, x, u, t)
        states[n] = x
    return states


def replay(weight: WeightFunction, seed: int, x0: float, n_steps: int) -> Trajectory:
    return simulate_trajectory(weight, x0, n_steps, seed)


# -- empirical measures ------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalMeasure:
    n_bins: int
    counts: np.ndarray
    total: int
    samples: np.ndarray | None = None  # (n_chains, n_retained) when small enough

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_bins + 1)

    @classmethod
    def from_samples(cls, samples, n_bins: int = 200, keep: bool = True) -> "EmpiricalMeasure":
        samples = np.asarray(samples, dtype=float)
        counts = _histogram(samples.ravel(), n_bins)
        return cls(n_bins, counts, int(samples.size), samples if keep else None)


def _histogram(x: np.ndarray, n_bins: int) -> np.ndarray:
    idx = np.minimum((x * n_bins).astype(np.int64), n_bins - 1)
    return np.bincount(idx, minlength=n_bins)


def run_chains(weight: WeightFunction, x0: float, n_steps: int, n_chains: int, burn_in: int,
               seed: int, n_bins: int = 200, threads: int = 1, sampler: str = "two-draw",
               keep_samples: bool | None = None) -> EmpiricalMeasure:
    """Histogram of Z_n for burn_in < n <= n_steps over independent chains.

    Raw samples are kept (shape (n_chains, n_steps - burn_in)) when there are
    at most 10^6 of them, unless ``keep_samples`` says otherwise.
    """
    if not 0 <= burn_in < n_steps:
        raise ValueError("need 0 <= burn_in < n_steps")
    _check_sampler(sampler)
    kernel = PlaceDependentKernel.diaconis_friedman(weight)
    retained = n_steps - burn_in
    if keep_samples is None:
        keep_samples = n_chains * retained <= RAW_KS_LIMIT

    def work(k, size, rng):
        x = np.full(size, float(x0))
        counts = np.zeros(n_bins, dtype=np.int64)
        kept = np.empty((size, retained)) if keep_samples else None
        for n in range(1, n_steps + 1):
            x = _advance(kernel, x, rng, sampler)
            if n > burn_in:
                counts += _histogram(x, n_bins)
                if kept is not None:
                    kept[:, n - burn_in - 1] = x
        return counts, kept

    results = _map_blocks(work, n_chains, seed, threads)
    counts = np.sum([c for c, _ in results], axis=0)
    samples = np.concatenate([s for _, s in results]) if keep_samples else None
    return EmpiricalMeasure(n_bins, counts, n_chains * retained, samples)


def step_statistics(weight: WeightFunction, x0: float, n_steps: int, n_chains: int, seed: int,
                    func, threads: int = 1, sampler: str = "two-draw"):
    """Mean and standard error of func(Z_n) across chains, for n = 0..n_steps."""
    _check_sampler(sampler)
    kernel = PlaceDependentKernel.diaconis_friedman(weight)

    def work(k, size, rng):
        x = np.full(size, float(x0))
        s1 = np.empty(n_steps + 1)
        s2 = np.empty(n_steps + 1)
        for n in range(n_steps + 1):
            if n:
                x = _advance(kernel, x, rng, sampler)
            v = func(x)
            s1[n], s2[n] = v.sum(), (v * v).sum()
        return s1, s2

    results = _map_blocks(work, n_chains, seed, threads)
    s1 = np.sum([r[0] for r in results], axis=0)
    s2 = np.sum([r[1] for r in results], axis=0)
    mean = s1 / n_chains
    var = np.maximum(s2 / n_chains - mean**2, 0.0) * n_chains / max(n_chains - 1, 1)
    return mean, np.sqrt(var / n_chains)


def terminal_states(weight: WeightFunction, x0: float, n_steps: int, n_chains: int, seed: int,
                    threads: int = 1) -> np.ndarray:
    kernel = PlaceDependentKernel.diaconis_friedman(weight)

    def work(k, size, rng):
        x = np.full(size, float(x0))
        for _ in range(n_steps):
            x = _advance(kernel, x, rng, "two-draw")
        return x

    return np.concatenate(_map_blocks(work, n_chains, seed, threads))


# -- statistics ---------------------------------------------------------------

def _validate_cdf(cdf: GridFunction) -> None:
    v = cdf.values
    if abs(v[0]) > 1e-9 or abs(v[-1] - 1.0) > 1e-9:
        raise ValueError("cdf must satisfy cdf(0) = 0 and cdf(1) = 1")
    if np.any(np.diff(v) < -1e-12):
        raise ValueError("cdf must be nondecreasing")


def ks_distance(emp: EmpiricalMeasure, cdf) -> float:
    """Kolmogorov-Smirnov distance between an empirical measure and a CDF.

    ``cdf`` is a GridFunction (linearly interpolated) or a vectorised
    callable. Uses the raw sorted samples when available and at most 10^6,
    otherwise the supremum over bin edges.
    """
    if isinstance(cdf, GridFunction):
        _validate_cdf(cdf)
    F = cdf
    if emp.samples is not None and emp.total <= RAW_KS_LIMIT:
        x = np.sort(emp.samples.ravel())
        n = x.size
        Fx = np.asarray(F(x), dtype=float)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - Fx), np.max(Fx - (i - 1) / n)))
    edges = emp.edges
    ecdf = np.concatenate(([0.0], np.cumsum(emp.counts) / emp.total))
    return float(np.max(np.abs(ecdf - np.asarray(F(edges), dtype=float))))


def ks_two_sample(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    xa = np.sort(a.samples.ravel())
    xb = np.sort(b.samples.ravel())
    pts = np.concatenate((xa, xb))
    fa = np.searchsorted(xa, pts, side="right") / xa.size
    fb = np.searchsorted(xb, pts, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n_eff: float, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value c(level) / sqrt(n_eff)."""
    return float(kstwobign.isf(level) / np.sqrt(n_eff))


def integrated_autocorrelation_time(series: np.ndarray) -> float:
    """Integrated autocorrelation time of stationary series stacked by row (one row per chain).

    Autocovariances are pooled over rows around the global mean and summed
    with Geyer's initial positive sequence rule (pairs of lags are added while
    their sum stays positive).
    """
    series = np.asarray(series, dtype=float)
    m, n = series.shape
    y = series - series.mean()
    var = np.mean(y * y)
    if var == 0.0:
        return 1.0
    # FFT autocovariance per row, averaged
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(y, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n].sum(axis=0)
    acov /= m * (n - np.arange(n))
    rho = acov / var
    tau = 1.0
    for k in range(1, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    return float(max(tau, 1.0))


@dataclass(frozen=True)
class EffectiveSize:
    n_total: int
    tau: float
    n_eff: float
    method: str


def effective_sample_size(samples: np.ndarray, probes=(0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95)) -> EffectiveSize:
    """Conservative effective size for KS on autocorrelated chains.

    tau is the largest integrated autocorrelation time over the state itself
    and the indicators 1{Z <= y} at the empirical quantiles ``probes``;
    n_eff = n_total / tau.
    """
    samples = np.asarray(samples, dtype=float)
    taus = [integrated_autocorrelation_time(samples)]
    for y in np.quantile(samples, probes):
        taus.append(integrated_autocorrelation_time((samples <= y).astype(float)))
    tau = max(taus)
    method = ("n_eff = n_total / max tau; tau = Geyer initial-positive-sequence integrated "
              "autocorrelation time, pooled over chains, maximised over Z and indicators "
              f"1{{Z <= y}} at quantiles {list(probes)}")
    return EffectiveSize(int(samples.size), tau, samples.size / tau, method)


@dataclass(frozen=True)
class AbsorptionSplit:
    near_0: float
    near_1: float
    undecided: float
    stderr_1: float


def absorption_split(weight: WeightFunction, x0: float, n_chains: int = 10_000, n_steps: int = 200,
                     epsilon: float = 1e-6, seed: int = 0, threads: int = 1) -> AbsorptionSplit:
    """Fractions of terminal states in [0, eps], [1 - eps, 1] and in between."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    z = terminal_states(weight, x0, n_steps, n_chains, seed, threads)
    near0 = float(np.mean(z <= epsilon))
    near1 = float(np.mean(z >= 1.0 - epsilon))
    middle = float(np.mean((z > epsilon) & (z < 1.0 - epsilon)))
    return AbsorptionSplit(near0, near1, middle,
                           float(np.sqrt(near1 * (1.0 - near1) / n_chains)))


@dataclass(frozen=True)
class MartingalePoint:
    n: int
    mean: float
    stderr: float


def martingale_check(weight: WeightFunction, h, x0: float, checkpoints=(1, 10, 100),
                     n_chains: int = 10_000, seed: int = 0, threads: int = 1) -> list[MartingalePoint]:
    """Monte Carlo mean of h(Z_n) at each checkpoint; for harmonic h it should stay at h(x0)."""
    checkpoints = sorted(int(c) for c in checkpoints)
    func = h if callable(h) else GridFunction(h)
    mean, se = step_statistics(weight, x0, checkpoints[-1], n_chains, seed,
                               lambda x: np.asarray(func(x), dtype=float), threads)
    return [MartingalePoint(n, float(mean[n]), float(se[n])) for n in checkpoints]


def transient_fraction(weight: WeightFunction, x0: float, n_steps: int, n_chains: int,
                       epsilon: float, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Fraction of chains inside [eps, 1 - eps] at each step n = 0..n_steps."""
    mean, _ = step_statistics(weight, x0, n_steps, n_chains, seed,
                              lambda x: ((x >= epsilon) & (x <= 1.0 - epsilon)).astype(float), threads)
    return mean
