"""Open spherical chains.

A single-vertex origami with its fold vertex on the paper boundary is
modelled by the arcs cut out of its panels by a small sphere around the
fold vertex: an open chain of short great-circle arcs. Edges are numbered
from 1 (edge ``i`` joins vertices ``i - 1`` and ``i``), interior joints from
1 to ``n - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DomainError, SamplingError
from .geometry import (
    COPLANAR_TOL,
    Arc,
    arcs_intersect,
    distances,
    hemisphere_margin,
    normalize_rows,
    rotate,
)
from .tolerances import EPS_FLAT, EPS_GEOM, EPS_HEMI, LENGTH_TOL

TWO_PI = 2.0 * math.pi
LONG_CHAIN_REASON = "length >= 2*pi may not be reconfigurable"


class ChainClass(str, Enum):
    FLAT = "Flat"
    HEMISPHERICAL = "Hemispherical"
    SPHERE_SPANNING = "SphereSpanning"


def _check_lengths(lengths, where: str = "arc_lengths") -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or len(lengths) == 0:
        raise DomainError(f"{where}: need at least one edge")
    for i, a in enumerate(lengths, start=1):
        if not np.isfinite(a) or a <= 0.0:
            raise DomainError(f"{where}: edge {i} has non-positive length {a}")
        if a >= math.pi:
            raise DomainError(
                f"{where}: edge {i} has length {a} >= pi; subdivide it with a flat crease"
            )
    return lengths


@dataclass(frozen=True)
class IntrinsicChain:
    arc_lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = _check_lengths(self.arc_lengths)
        total = float(lengths.sum())
        if total >= TWO_PI:
            raise DomainError(f"total length {total} rejected: {LONG_CHAIN_REASON}")
        object.__setattr__(self, "arc_lengths", tuple(float(a) for a in lengths))

    @property
    def n(self) -> int:
        return len(self.arc_lengths)

    @property
    def total(self) -> float:
        return math.fsum(self.arc_lengths)

    @property
    def length_class(self) -> str:
        return "short" if self.total < math.pi else "medium"


def origami_to_chain(sector_angles, vertex_on_boundary: bool) -> IntrinsicChain:
    """Arc lengths of the spherical chain of a single-vertex origami.

    Each panel between consecutive creases (or a crease and the paper
    boundary) becomes one arc whose length is the panel's sector angle.
    """
    if not vertex_on_boundary:
        raise DomainError(
            "fold vertex in the paper interior gives a closed chain; only open chains "
            "(fold vertex on the boundary) are supported"
        )
    return IntrinsicChain(tuple(_check_lengths(sector_angles, "sector_angles")))


def turning_angles(vertices: np.ndarray) -> np.ndarray:
    """Signed turning angle at each interior vertex.

    Measured counter-clockwise about the vertex, from the arriving
    direction to the leaving direction; zero where the chain goes straight.
    Rotating the tail of the chain about vertex ``i`` by ``theta`` adds
    exactly ``theta`` to the turning angle there and changes no other.
    """
    V = np.asarray(vertices, dtype=float)
    p = V[1:-1]
    prev, nxt = V[:-2], V[2:]
    t_in = -(prev - np.einsum("ij,ij->i", prev, p)[:, None] * p)
    t_out = nxt - np.einsum("ij,ij->i", nxt, p)[:, None] * p
    s = np.einsum("ij,ij->i", p, np.cross(t_in, t_out))
    c = np.einsum("ij,ij->i", t_in, t_out)
    return np.arctan2(s, c)


def forward_kinematics(arc_lengths, turning, p0=(1.0, 0.0, 0.0), d0=(0.0, 1.0, 0.0)) -> np.ndarray:
    """Vertices of the chain starting at ``p0`` heading along ``d0``."""
    p = np.asarray(p0, dtype=float)
    d = np.asarray(d0, dtype=float)
    pts = [p]
    for i, a in enumerate(arc_lengths):
        q = math.cos(a) * p + math.sin(a) * d
        d = -math.sin(a) * p + math.cos(a) * d
        p = q
        if i < len(turning):
            d = rotate(d, p, turning[i])
        pts.append(p)
    return normalize_rows(np.array(pts))


class SphericalChain:
    """A configuration ``p_0 .. p_n`` of an open chain on the unit sphere.

    Instances are immutable; moving the chain produces a new instance via
    :meth:`moved`, which re-checks edge lengths.
    """

    __slots__ = ("vertices", "arc_lengths")

    def __init__(self, vertices, arc_lengths=None, tol: float = LENGTH_TOL):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 3 or len(V) < 2:
            raise DomainError("vertices must be an (n+1, 3) array with n >= 1")
        norms = np.linalg.norm(V, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-6)
        if len(bad):
            raise DomainError(f"vertex {int(bad[0])} is not on the unit sphere (norm {norms[bad[0]]})")
        V = V / norms[:, None]
        measured = distances(V[:-1], V[1:])
        if arc_lengths is None:
            lengths = measured
        else:
            lengths = np.array(arc_lengths, dtype=float)
            if lengths.shape != measured.shape:
                raise DomainError(
                    f"{len(lengths)} arc lengths given for {len(measured)} edges"
                )
            err = np.abs(measured - lengths)
            bad = np.flatnonzero(err > tol)
            if len(bad):
                i = int(bad[0])
                raise DomainError(
                    f"edge {i + 1}: vertex distance {measured[i]!r} differs from arc length "
                    f"{lengths[i]!r} by {err[i]:.3g}"
                )
        lengths = _check_lengths(lengths)
        V.setflags(write=False)
        lengths.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "arc_lengths", lengths)

    def __setattr__(self, name, value):
        raise AttributeError("SphericalChain is immutable")

    def __repr__(self):
        return f"SphericalChain(n={self.n}, total={self.total:.6g})"

    @classmethod
    def from_turning_angles(cls, arc_lengths, turning, rotation: np.ndarray | None = None):
        V = forward_kinematics(arc_lengths, turning)
        if rotation is not None:
            V = V @ np.asarray(rotation).T
        return cls(V, arc_lengths, tol=1e-9)

    @property
    def n(self) -> int:
        return len(self.arc_lengths)

    @property
    def total(self) -> float:
        return math.fsum(self.arc_lengths)

    @property
    def intrinsic(self) -> IntrinsicChain:
        return IntrinsicChain(tuple(self.arc_lengths))

    def edge(self, i: int) -> Arc:
        """Edge ``e_i`` (1-based)."""
        return Arc(self.vertices[i - 1], self.vertices[i])

    def moved(self, vertices, tol: float = LENGTH_TOL) -> "SphericalChain":
        return SphericalChain(vertices, self.arc_lengths, tol=tol)


@dataclass(frozen=True)
class ProgressMeasure:
    betas: np.ndarray
    delta_sum: float
    degenerate: tuple[int, ...] = ()


def betas(chain: SphericalChain | np.ndarray, eps: float = EPS_GEOM) -> ProgressMeasure:
    """Interior angles beta_1 .. beta_{n-1} and their sum Delta.

    A joint where the next edge retraces the previous one has beta = 0 and
    is listed in ``degenerate`` (1-based joint indices).
    """
    V = chain.vertices if isinstance(chain, SphericalChain) else np.asarray(chain)
    b = math.pi - np.abs(turning_angles(V))
    degenerate = tuple(int(i) + 1 for i in np.flatnonzero(b < eps))
    b[b < eps] = 0.0
    return ProgressMeasure(b, float(math.fsum(b)), degenerate)


def classify(chain: SphericalChain, eps_flat: float = EPS_FLAT, eps_hemi: float = EPS_HEMI) -> ChainClass:
    b = betas(chain).betas
    if np.all(b >= math.pi - eps_flat):
        return ChainClass.FLAT
    margin, _ = hemisphere_margin(chain.vertices)
    if margin > eps_hemi:
        return ChainClass.HEMISPHERICAL
    return ChainClass.SPHERE_SPANNING


def _nonadjacent_hits(V: np.ndarray, tol: float) -> list[tuple[int, int]]:
    n = len(V) - 1
    if n < 3:
        return []
    I, J = np.triu_indices(n, k=2)
    A1, B1, A2, B2 = V[I], V[I + 1], V[J], V[J + 1]
    n1 = normalize_rows(np.cross(A1, B1))
    n2 = normalize_rows(np.cross(A2, B2))
    d = np.cross(n1, n2)
    s = np.linalg.norm(d, axis=1)
    coplanar = s < COPLANAR_TOL
    x = d / np.where(coplanar, 1.0, s)[:, None]

    def on(a, b, nn, pts):
        return (np.einsum("ij,ij->i", np.cross(a, pts), nn) >= -tol) & (
            np.einsum("ij,ij->i", np.cross(pts, b), nn) >= -tol
        )

    hit = np.zeros(len(I), dtype=bool)
    for sign in (1.0, -1.0):
        pts = sign * x
        hit |= on(A1, B1, n1, pts) & on(A2, B2, n2, pts)
    hit &= ~coplanar
    for k in np.flatnonzero(coplanar):
        hit[k] = bool(arcs_intersect(Arc(A1[k], B1[k]), Arc(A2[k], B2[k]), tol))
    return [(int(i) + 1, int(j) + 1) for i, j in zip(I[hit], J[hit])]


def intersecting_pairs(chain: SphericalChain | np.ndarray, tol: float = EPS_GEOM) -> list[tuple[int, int]]:
    """Edge pairs (1-based) that collide.

    Non-adjacent edges collide when their closed arcs meet; adjacent edges
    collide when the second folds back onto the first (beta = 0), since two
    short arcs leaving a common vertex in different directions cannot meet
    again before the antipode.
    """
    V = chain.vertices if isinstance(chain, SphericalChain) else np.asarray(chain, dtype=float)
    pairs = _nonadjacent_hits(V, tol)
    if len(V) > 2:
        b = math.pi - np.abs(turning_angles(V))
        pairs += [(int(i) + 1, int(i) + 2) for i in np.flatnonzero(b < tol)]
    return sorted(pairs)


def self_intersects(chain: SphericalChain | np.ndarray, tol: float = EPS_GEOM) -> bool:
    return bool(intersecting_pairs(chain, tol))


def _random_lengths(rng: np.random.Generator, n: int, total: float) -> np.ndarray:
    mean = total / n
    spread = 0.9 * min(mean, math.pi - mean)
    dev = rng.uniform(-1.0, 1.0, n)
    if n > 1:
        dev -= dev.mean()
        dev *= 1.0 / max(1.0, float(np.abs(dev).max()))
    else:
        dev[:] = 0.0
    return mean + spread * dev


def random_chain(n: int, total: float, seed: int, max_tries: int = 100_000, min_beta: float = 1e-3) -> SphericalChain:
    """A random non-self-intersecting configuration, deterministic per seed.

    Edge lengths are spread around ``total / n`` so each stays in (0, pi)
    and they sum to ``total``; the configuration is a random walk with
    uniformly random turning, rejected until it is embedded.
    """
    if n < 2:
        raise DomainError("random_chain needs n >= 2")
    if not 0.0 < total < TWO_PI:
        raise DomainError(f"total length must lie in (0, 2*pi), got {total}; {LONG_CHAIN_REASON}")
    if total / n >= math.pi:
        raise DomainError(f"cannot split {total} into {n} short arcs")
    rng = np.random.default_rng(seed)
    lengths = _random_lengths(rng, n, total)
    lengths *= total / math.fsum(lengths)
    rejected = 0
    for _ in range(max_tries):
        turning = rng.uniform(-(math.pi - min_beta), math.pi - min_beta, n - 1)
        rot = Rotation.random(random_state=rng).as_matrix()
        V = forward_kinematics(lengths, turning) @ rot.T
        if not self_intersects(V):
            return SphericalChain(V, lengths, tol=1e-9)
        rejected += 1
    raise SamplingError(
        f"random_chain(n={n}, total={total}, seed={seed}): all {rejected} samples self-intersected"
    )
