"""Monte Carlo measure of classes of great circles.

Great circles are identified with antipodal pole pairs, so a uniform pole
on the sphere is a uniform great circle and the whole space has measure
2*pi. For a chain, a circle is *nice* when it crosses at most one edge;
class 0 crosses nothing and class ``i`` crosses only edge ``i``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import SphericalChain
from .errors import DomainError, InvariantError
from .geometry import GreatCircle, normalize_rows
from .tolerances import EPS_GEOM

TWO_PI = 2.0 * math.pi
CHUNK = 1 << 15


@dataclass(frozen=True)
class CrossingCount:
    count: int
    nice_class: int | None
    degenerate: bool = False


def crossing_count(c: GreatCircle, chain: SphericalChain, eps: float = EPS_GEOM) -> CrossingCount:
    side = chain.vertices @ c.pole
    degenerate = bool(np.any(np.abs(side) < eps))
    crossed = np.flatnonzero(side[:-1] * side[1:] < 0)
    count = len(crossed)
    if count == 0:
        nice = 0
    elif count == 1:
        nice = int(crossed[0]) + 1
    else:
        nice = None
    return CrossingCount(count, nice, degenerate)


@dataclass
class CrossingClassReport:
    """Estimated measures of N_0 .. N_n plus the non-nice remainder.

    ``mu_estimates[i]`` estimates the measure of class ``i``; all values are
    in units where the space of great circles has measure 2*pi.
    """

    n: int
    sample_count: int
    counts: np.ndarray  # per class 0..n, then non-nice
    crossing_total: int = 0  # total crossings over all samples
    seed: int | None = None
    mu_estimates: np.ndarray = field(init=False)
    standard_errors: np.ndarray = field(init=False)

    def __post_init__(self):
        f = self.counts[:-1] / self.sample_count
        self.mu_estimates = TWO_PI * f
        self.standard_errors = TWO_PI * np.sqrt(f * (1 - f) / self.sample_count)

    @property
    def non_nice(self) -> tuple[float, float]:
        f = self.counts[-1] / self.sample_count
        return TWO_PI * f, TWO_PI * math.sqrt(f * (1 - f) / self.sample_count)

    def weighted(self, weights) -> tuple[float, float]:
        """Estimate and standard error of 2*pi * E[w(class)] over all classes."""
        w = np.asarray(weights, dtype=float)
        p = self.counts / self.sample_count
        mean = float(np.dot(w, p))
        var = float(np.dot(w * w, p)) - mean * mean
        return TWO_PI * mean, TWO_PI * math.sqrt(max(var, 0.0) / self.sample_count)

    @property
    def total_measure(self) -> tuple[float, float]:
        return self.weighted(np.ones(self.n + 2))

    @property
    def lemma_lhs(self) -> tuple[float, float]:
        """sum_{i>=1} mu(N_i) + 2 mu(N_0), with its standard error."""
        w = np.ones(self.n + 2)
        w[0] = 2.0
        w[-1] = 0.0
        return self.weighted(w)

    @property
    def crossing_integral(self) -> float:
        """Estimate of the integral over all circles of their crossing count."""
        return TWO_PI * self.crossing_total / self.sample_count


def _sample_chunk(V: np.ndarray, size: int, seed_seq: np.random.SeedSequence, eps: float):
    rng = np.random.default_rng(seed_seq)
    poles = normalize_rows(rng.standard_normal((size, 3)))
    side = poles @ V.T
    bad = np.any(np.abs(side) < eps, axis=1)
    while bad.any():
        poles[bad] = normalize_rows(rng.standard_normal((int(bad.sum()), 3)))
        side[bad] = poles[bad] @ V.T
        bad = np.any(np.abs(side) < eps, axis=1)
    cross = side[:, :-1] * side[:, 1:] < 0
    count = cross.sum(axis=1)
    n = V.shape[0] - 1
    cls = np.where(count == 0, 0, np.where(count == 1, np.argmax(cross, axis=1) + 1, n + 1))
    return np.bincount(cls, minlength=n + 2), int(count.sum())


def estimate_class_measures(
    chain: SphericalChain, samples: int, seed: int = 0, workers: int = 1, eps: float = EPS_GEOM
) -> CrossingClassReport:
    """Sample uniform poles and tally crossing classes.

    Samples are drawn in fixed-size chunks, each with its own child seed,
    and tallies are summed in chunk order, so the report depends only on
    ``seed`` and ``samples``, not on ``workers``. Poles whose circle passes
    within ``eps`` of a vertex are redrawn.
    """
    if samples < 1000:
        raise DomainError("estimate_class_measures needs at least 1000 samples")
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    V = np.asarray(chain.vertices)
    jobs = list(zip(sizes, seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _sample_chunk(V, job[0], job[1], eps), jobs))
    else:
        parts = [_sample_chunk(V, size, seq, eps) for size, seq in jobs]
    counts = np.sum([p[0] for p in parts], axis=0)
    crossings = sum(p[1] for p in parts)
    return CrossingClassReport(chain.n, samples, counts, crossings, seed)


def verify_measure_inequality(report: CrossingClassReport, alpha: float, sigmas: float = 3.0) -> tuple[bool, float]:
    """Check sum_{i>=1} mu(N_i) + 2 mu(N_0) >= 2(2*pi - alpha) up to sampling error.

    Returns the verdict and the margin (estimate minus bound).
    """
    lhs, se = report.lemma_lhs
    margin = lhs - 2.0 * (TWO_PI - alpha)
    return margin >= -sigmas * se, margin


def class_threshold(n: int, alpha: float) -> float:
    """Lower bound (4*pi - 2*alpha)/(n + 2) on the largest nice class."""
    return (4.0 * math.pi - 2.0 * alpha) / (n + 2)


def largest_class(report: CrossingClassReport, n: int, alpha: float, sigmas: float = 3.0) -> tuple[int, float]:
    """Argmax nice class (lowest index on ties) and its estimated measure."""
    mu = report.mu_estimates
    k = int(np.argmax(mu))
    if mu[k] < class_threshold(n, alpha) - sigmas * report.standard_errors[k]:
        raise InvariantError(
            f"largest nice class N_{k} has measure {mu[k]:.6g}, below the guaranteed "
            f"{class_threshold(n, alpha):.6g}",
            instance=report,
        )
    return k, float(mu[k])
