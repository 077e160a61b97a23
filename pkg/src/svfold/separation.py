"""Separating great circles and belts.

The poles of the circles crossing only edge ``k`` (or no edge, ``k = 0``)
form a spherical polyhedral cone: every vertex before the crossing lies on
one side of the circle and every vertex after it on the other. The cone's
area is the measure of the class, and its inscribed circle of diameter
``w`` dualizes to a belt of width ``w`` around the great circle dual to the
centre, which meets the chain in edge ``k`` only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import TWO_PI, LONG_CHAIN_REASON, SphericalChain
from .errors import CertificationError, DomainError
from .geometry import ConvexSphericalPolygon, GreatCircle, dual, max_inscribed_circle, unit
from .measure import crossing_count
from .tolerances import EPS_BELT, EPS_GEOM


@dataclass(frozen=True)
class Belt:
    median: GreatCircle
    width: float
    crossing_edge: int | None = None

    @property
    def half_width(self) -> float:
        return 0.5 * self.width


@dataclass(frozen=True)
class BeltCertificate:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class SeparationResult:
    """A certified belt and the split it induces.

    ``pole_witness`` is the belt centre oriented so that the vertices before
    the separating edge have positive offset; for ``edge_index == 0`` the
    whole chain is on the positive side.
    """

    edge_index: int
    belt: Belt
    pole_witness: np.ndarray
    class_measures: np.ndarray
    crossing_point: np.ndarray | None = None
    n: int = field(default=0)

    @property
    def head(self) -> range:
        """Vertex indices of the subchain p[0 : k-1]."""
        return range(0, self.edge_index) if self.edge_index else range(0, self.n + 1)

    @property
    def tail(self) -> range:
        """Vertex indices of the subchain p[k : n] (empty when nothing is crossed)."""
        return range(self.edge_index, self.n + 1) if self.edge_index else range(0)


def width_bound(n: int, alpha: float) -> float:
    """Guaranteed belt width (2*pi - alpha)/(n + 2)."""
    return (TWO_PI - alpha) / (n + 2)


def class_signs(n: int, k: int) -> np.ndarray:
    s = np.ones(n + 1)
    if k:
        s[k:] = -1.0
    return s


def dual_nice_region(chain: SphericalChain, k: int, seed_pole=None) -> ConvexSphericalPolygon:
    """Poles of the circles crossing only edge ``k`` (none for ``k = 0``).

    The class is a single convex cone and its antipode; the copy returned is
    the one containing ``seed_pole`` when given, else the one on the side of
    ``p_0``. Raises ``DomainError`` if the seed's circle is not of class ``k``.
    """
    if not 0 <= k <= chain.n:
        raise DomainError(f"class index {k} outside 0..{chain.n}")
    normals = class_signs(chain.n, k)[:, None] * chain.vertices
    if seed_pole is not None:
        seed = unit(seed_pole)
        found = crossing_count(GreatCircle(seed), chain)
        if found.degenerate or found.nice_class != k:
            raise DomainError(f"seed pole is not the pole of a circle of class N_{k}")
        if float((normals @ seed).min()) < 0:
            normals = -normals
    return ConvexSphericalPolygon(normals)


def exact_class_measures(chain: SphericalChain) -> np.ndarray:
    """Measures of N_0 .. N_n as areas of their dual cones."""
    return np.array([dual_nice_region(chain, k).area() for k in range(chain.n + 1)])


def certify_belt(chain: SphericalChain, belt: Belt, tol: float = EPS_GEOM) -> BeltCertificate:
    """Check directly that the belt holds no vertex and meets only its crossing edge.

    An arc whose endpoints lie on one side of the median stays at least as
    far from it as the nearer endpoint (the offset is a concave function
    along the arc where positive), so vertex offsets decide every edge.
    """
    offsets = np.arcsin(np.clip(chain.vertices @ belt.median.pole, -1.0, 1.0))
    half = belt.half_width
    violations = []
    for i in np.flatnonzero(np.abs(offsets) < half - tol):
        violations.append(f"vertex {int(i)} at distance {abs(offsets[i]):.6g} inside half-width {half:.6g}")
    for i in range(1, chain.n + 1):
        crosses = offsets[i - 1] * offsets[i] < 0
        if crosses and i != belt.crossing_edge:
            violations.append(f"edge {i} crosses the median")
        if not crosses and i == belt.crossing_edge:
            violations.append(f"edge {i} was expected to cross the median but does not")
    return BeltCertificate(not violations, tuple(violations))


def _crossing_point(chain: SphericalChain, k: int, pole: np.ndarray) -> np.ndarray:
    a, b = chain.vertices[k - 1], chain.vertices[k]
    x = unit(np.cross(np.cross(a, b), pole))
    return x if float(np.dot(x, a + b)) > 0 else -x


def find_separation(chain: SphericalChain, eps_belt: float = EPS_BELT, prefer_empty: bool = True) -> SeparationResult:
    """Largest nice class and the widest belt inside it.

    Classes are ranked by their exact measure (lowest index on ties). When
    the empty class N_0 already admits a belt meeting the width bound it is
    preferred, so a hemispherical chain gets a belt avoiding it entirely.
    """
    alpha = chain.total
    if alpha >= TWO_PI:
        raise DomainError(f"total length {alpha} rejected: {LONG_CHAIN_REASON}")
    bound = width_bound(chain.n, alpha)
    regions = [dual_nice_region(chain, k) for k in range(chain.n + 1)]
    measures = np.array([r.area() for r in regions])
    best = float(measures.max())
    k = int(np.flatnonzero(measures >= best - 1e-12 * max(1.0, best))[0])
    if prefer_empty and k != 0 and 2 * regions[0].chebyshev()[1] >= bound - eps_belt:
        k = 0
    try:
        center, width = max_inscribed_circle(regions[k])
    except DomainError as exc:
        raise CertificationError(f"nice class N_{k} has an empty dual region", instance=chain) from exc
    belt = Belt(dual(center), width, k or None)
    cert = certify_belt(chain, belt)
    if not cert:
        raise CertificationError(
            f"belt around class N_{k} failed certification: {'; '.join(cert.violations)}", instance=chain
        )
    if width < bound - eps_belt:
        raise CertificationError(
            f"belt width {width:.6g} below the guaranteed {bound:.6g} for class N_{k}", instance=chain
        )
    x = _crossing_point(chain, k, center) if k else None
    return SeparationResult(k, belt, center, measures, x, chain.n)
