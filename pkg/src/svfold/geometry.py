"""Spherical geometry on the unit sphere.

Points are plain ``numpy`` arrays of shape ``(3,)``. Great circles are
identified with their pole, canonicalized so that the point <-> circle
duality is a function. All sign and incidence predicates share a single
tolerance, ``EPS_GEOM``; contacts within it are reported as degenerate
rather than being silently resolved either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from itertools import combinations

import numpy as np

from .errors import DomainError
from .tolerances import EPS_GEOM

# Two great circles whose normals differ by less than this are treated as
# the same circle when intersecting arcs.
COPLANAR_TOL = 1e-9

UnitVector = np.ndarray


def unit(v) -> UnitVector:
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm == 0.0:
        raise DomainError(f"cannot normalize vector {v!r}")
    return v / norm


def normalize_rows(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def spherical_distance(p, q) -> float:
    """Angle between two unit vectors, stable near 0 and pi."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return math.atan2(float(np.linalg.norm(np.cross(p, q))), float(np.dot(p, q)))


def distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise `spherical_distance` for stacked vectors."""
    return np.arctan2(np.linalg.norm(np.cross(p, q), axis=-1), np.einsum("...i,...i->...", p, q))


def lonlat(lon: float, lat: float = 0.0) -> UnitVector:
    """Unit vector at the given longitude/latitude, both in radians."""
    return np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])


def rotate(points, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of one or many vectors about a unit axis."""
    points = np.asarray(points, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    k = np.asarray(axis, dtype=float)
    kv = points @ k
    return points * c + np.cross(k, points) * s + np.multiply.outer(kv, k) * (1.0 - c)


def random_unit_vectors(rng: np.random.Generator, size: int) -> np.ndarray:
    return normalize_rows(rng.standard_normal((size, 3)))


def triangle_area(a, b, c) -> float:
    """Area of the spherical triangle abc (Van Oosterom-Strackee)."""
    num = abs(float(np.dot(a, np.cross(b, c))))
    den = 1.0 + float(np.dot(a, b)) + float(np.dot(b, c)) + float(np.dot(c, a))
    return 2.0 * math.atan2(num, den)


def canonical_pole(v) -> UnitVector:
    """Pick the representative of {v, -v} with the larger (z, y, x) tuple."""
    v = unit(v)
    if (v[2], v[1], v[0]) >= (-v[2], -v[1], -v[0]):
        return v + 0.0  # folds -0.0 into 0.0
    return -v + 0.0


@dataclass(frozen=True, eq=False)
class GreatCircle:
    pole: UnitVector

    def __post_init__(self):
        pole = canonical_pole(self.pole)
        pole.setflags(write=False)
        object.__setattr__(self, "pole", pole)

    @classmethod
    def through(cls, a, b) -> "GreatCircle":
        """The great circle through two non-antipodal, distinct points."""
        return cls(np.cross(a, b))

    def signed_offset(self, p) -> float:
        """Signed angular distance of ``p`` from the circle (positive toward the pole)."""
        return math.asin(max(-1.0, min(1.0, float(np.dot(self.pole, p)))))

    def distance(self, p) -> float:
        return abs(self.signed_offset(p))

    def same_as(self, other: "GreatCircle", tol: float = 1e-12) -> bool:
        return float(np.max(np.abs(self.pole - other.pole))) <= tol

    def __eq__(self, other):
        if not isinstance(other, GreatCircle):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None


@singledispatch
def dual(obj):
    """Polar duality: a great circle maps to its pole and a point to its equator."""
    return GreatCircle(np.asarray(obj, dtype=float))


@dual.register
def _(obj: GreatCircle) -> UnitVector:
    return obj.pole


@dataclass(frozen=True, eq=False)
class Arc:
    """The short great-circle arc from ``a`` to ``b``."""

    a: UnitVector
    b: UnitVector

    def __post_init__(self):
        a, b = unit(self.a), unit(self.b)
        length = spherical_distance(a, b)
        if length <= EPS_GEOM:
            raise DomainError("arc endpoints coincide")
        if length >= math.pi - EPS_GEOM:
            raise DomainError("arc endpoints are antipodal; only short arcs (length < pi) are supported")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return spherical_distance(self.a, self.b)

    @property
    def normal(self) -> UnitVector:
        return unit(np.cross(self.a, self.b))

    @property
    def circle(self) -> GreatCircle:
        return GreatCircle(self.normal)

    def point_at(self, frac: float) -> UnitVector:
        """Point a fraction ``frac`` of the way from ``a`` to ``b``."""
        theta = frac * self.length
        return rotate(self.a, self.normal, theta)

    def sample(self, count: int) -> np.ndarray:
        theta = np.linspace(0.0, self.length, count)
        t = np.cross(self.normal, self.a)
        return np.outer(np.cos(theta), self.a) + np.outer(np.sin(theta), t)


@dataclass(frozen=True)
class CircleArcCrossing:
    crosses: bool
    degenerate: bool

    def __bool__(self):
        return self.crosses


def circle_crosses_arc(c: GreatCircle, e: Arc, eps: float = EPS_GEOM) -> CircleArcCrossing:
    da = float(np.dot(c.pole, e.a))
    db = float(np.dot(c.pole, e.b))
    degenerate = abs(da) < eps or abs(db) < eps
    return CircleArcCrossing(crosses=da * db < 0.0, degenerate=degenerate)


@dataclass(frozen=True)
class ArcContact:
    intersects: bool
    endpoint_only: bool = False
    point: np.ndarray | None = None
    collinear: bool = False

    def __bool__(self):
        return self.intersects


def _on_arc(x, a, b, n, tol) -> bool:
    return float(np.dot(np.cross(a, x), n)) >= -tol and float(np.dot(np.cross(x, b), n)) >= -tol


def _is_endpoint(x, e: Arc, tol) -> bool:
    return spherical_distance(x, e.a) <= tol or spherical_distance(x, e.b) <= tol


def _collinear_contact(e1: Arc, e2: Arc, n1, n2, tol) -> ArcContact:
    u = e1.a
    w = np.cross(n1, u)
    alpha1, alpha2 = e1.length, e2.length
    start = e2.a if float(np.dot(n1, n2)) > 0 else e2.b
    s = math.atan2(float(np.dot(start, w)), float(np.dot(start, u))) % (2 * math.pi)
    if s > 2 * math.pi - tol:
        s -= 2 * math.pi
    # overlap of [0, alpha1] with [s, s + alpha2] and with its wrap [s - 2pi, s + alpha2 - 2pi]
    spans = [(max(0.0, s), min(alpha1, s + alpha2))]
    if s + alpha2 > 2 * math.pi - tol:
        spans.append((0.0, min(alpha1, s + alpha2 - 2 * math.pi)))
    best = max(spans, key=lambda iv: iv[1] - iv[0])
    overlap = best[1] - best[0]
    if overlap < -tol:
        return ArcContact(False, collinear=True)
    point = rotate(u, n1, best[0])
    return ArcContact(True, endpoint_only=overlap <= tol, point=point, collinear=True)


def arcs_intersect(e1: Arc, e2: Arc, tol: float = EPS_GEOM) -> ArcContact:
    """Closed-arc intersection test.

    The two supporting circles meet at +-x with x along n1 x n2; the arcs
    intersect when one of those points lies on both arcs. Arcs on a common
    circle are compared as angular intervals. ``endpoint_only`` marks the
    case where the arcs only touch at a shared endpoint.
    """
    n1, n2 = e1.normal, e2.normal
    d = np.cross(n1, n2)
    s = float(np.linalg.norm(d))
    if s < COPLANAR_TOL:
        return _collinear_contact(e1, e2, n1, n2, tol)
    x = d / s
    for cand in (x, -x):
        if _on_arc(cand, e1.a, e1.b, n1, tol) and _on_arc(cand, e2.a, e2.b, n2, tol):
            touch = _is_endpoint(cand, e1, 1e3 * tol) and _is_endpoint(cand, e2, 1e3 * tol)
            return ArcContact(True, endpoint_only=touch, point=cand)
    return ArcContact(False)


def point_arc_distance(x, e: Arc) -> float:
    """Distance from a point to a closed short arc."""
    n = e.normal
    h = float(np.dot(x, n))
    proj = np.asarray(x, dtype=float) - h * n
    if np.linalg.norm(proj) > 1e-15:
        proj = proj / np.linalg.norm(proj)
        if _on_arc(proj, e.a, e.b, n, 0.0):
            return math.asin(min(1.0, abs(h)))
    return min(spherical_distance(x, e.a), spherical_distance(x, e.b))


def lune_area(span: float) -> float:
    """Area of a lune whose boundary circles meet at angle ``span``."""
    if not 0.0 < span < math.pi:
        raise DomainError(f"lune span must lie in (0, pi), got {span}")
    return 2.0 * span


@dataclass(frozen=True, eq=False)
class Lune:
    circles: tuple[GreatCircle, GreatCircle]
    span: float

    @classmethod
    def dual_of_arc(cls, e: Arc) -> "Lune":
        """The lune of poles whose circles cross ``e``."""
        return cls((GreatCircle(e.a), GreatCircle(e.b)), e.length)

    @property
    def area(self) -> float:
        return lune_area(self.span)


def min_norm_point(points, tol: float = 1e-12) -> np.ndarray:
    """Point of the convex hull of ``points`` closest to the origin.

    Exhaustive over faces of at most three points, which is exact in R^3:
    the nearest point is the projection of the origin onto the affine hull
    of the face containing it in its relative interior, and it is the only
    candidate x with <p, x> >= |x|^2 for all points p. Returns the zero
    vector when the origin lies in the hull.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, dim = P.shape
    if dim > 3:
        raise ValueError("min_norm_point handles dimension <= 3")
    cands = [P]
    if m >= 2:
        i, j = np.array(list(combinations(range(m), 2))).T
        a = P[i]
        e = P[j] - a
        ee = np.einsum("ij,ij->i", e, e)
        ok = ee > 1e-24
        t = -np.einsum("ij,ij->i", a, e) / np.where(ok, ee, 1.0)
        keep = ok & (t >= -tol) & (t <= 1 + tol)
        cands.append(a[keep] + t[keep, None] * e[keep])
    if m >= 3:
        i, j, k = np.array(list(combinations(range(m), 3))).T
        a = P[i]
        e1 = P[j] - a
        e2 = P[k] - a
        g11 = np.einsum("ij,ij->i", e1, e1)
        g12 = np.einsum("ij,ij->i", e1, e2)
        g22 = np.einsum("ij,ij->i", e2, e2)
        r1 = -np.einsum("ij,ij->i", a, e1)
        r2 = -np.einsum("ij,ij->i", a, e2)
        det = g11 * g22 - g12 * g12
        ok = det > 1e-14 * g11 * g22
        det = np.where(ok, det, 1.0)
        s = (r1 * g22 - r2 * g12) / det
        u = (g11 * r2 - g12 * r1) / det
        keep = ok & (s >= -tol) & (u >= -tol) & (1 - s - u >= -tol)
        cands.append(a[keep] + s[keep, None] * e1[keep] + u[keep, None] * e2[keep])
    X = np.concatenate(cands)
    norm2 = np.einsum("ij,ij->i", X, X)
    optimal = (X @ P.T).min(axis=1) >= norm2 - tol
    if not optimal.any():
        return np.zeros(dim)
    X, norm2 = X[optimal], norm2[optimal]
    return X[int(np.argmin(norm2))]


def hemisphere_margin(points) -> tuple[float, UnitVector | None]:
    """max over |w| <= 1 of min_i <w, p_i>, and a maximizing unit witness.

    By convex duality the optimum equals the distance from the origin to the
    convex hull of the points, so a positive value certifies that all points
    lie in the open hemisphere centred on the witness.
    """
    x = min_norm_point(points)
    margin = float(np.linalg.norm(x))
    if margin <= 0.0:
        return 0.0, None
    return margin, x / margin


class ConvexSphericalPolygon:
    """Intersection of closed hemispheres ``{q : <q, g> >= 0}``.

    Stored by its inward normals so that lunes (whose two vertices are
    antipodal) and hemispheres are representable alongside ordinary
    polygons contained in an open hemisphere.
    """

    def __init__(self, normals):
        G = np.atleast_2d(np.asarray(normals, dtype=float))
        if G.shape[0] == 0 or G.shape[1] != 3:
            raise DomainError("polygon needs at least one 3D bounding normal")
        G = normalize_rows(G)
        G.setflags(write=False)
        self.normals = G
        self._center = None

    @classmethod
    def from_vertices(cls, vertices, tol: float = EPS_GEOM) -> "ConvexSphericalPolygon":
        V = normalize_rows(np.atleast_2d(vertices))
        if len(V) < 3:
            raise DomainError("a polygon given by vertices needs at least three of them")
        margin, center = hemisphere_margin(V)
        if margin <= tol:
            raise DomainError("polygon vertices are not contained in an open hemisphere")
        G = normalize_rows(np.cross(V, np.roll(V, -1, axis=0)))
        if float(np.sum(G @ center)) < 0:
            G = -G
        if (V @ G.T).min() < -tol:
            raise DomainError("vertices do not form a convex spherical polygon")
        return cls(G)

    def contains(self, q, tol: float = 0.0):
        q = np.asarray(q, dtype=float)
        return (q @ self.normals.T).min(axis=-1) >= -tol

    def chebyshev(self) -> tuple[UnitVector | None, float]:
        """Centre and radius of the largest inscribed circle."""
        if self._center is None:
            x = min_norm_point(self.normals)
            t = float(np.linalg.norm(x))
            self._center = (x / t if t > 0 else None, math.asin(min(1.0, t)))
        return self._center

    @property
    def is_empty(self) -> bool:
        return self.chebyshev()[1] <= EPS_GEOM

    @property
    def vertices(self) -> np.ndarray:
        """Corners ordered counter-clockwise about the inscribed centre."""
        center, _ = self.chebyshev()
        if center is None:
            return np.zeros((0, 3))
        G = self.normals
        pts = []
        for i, j in combinations(range(len(G)), 2):
            d = np.cross(G[i], G[j])
            norm = np.linalg.norm(d)
            if norm < 1e-12:
                continue
            d = d / norm
            for cand in (d, -d):
                if (G @ cand).min() >= -1e-12 and not any(np.linalg.norm(cand - p) < 1e-9 for p in pts):
                    pts.append(cand)
        if not pts:
            return np.zeros((0, 3))
        P = np.array(pts)
        e1 = unit(np.cross(center, [1.0, 0.0, 0.0] if abs(center[0]) < 0.9 else [0.0, 1.0, 0.0]))
        e2 = np.cross(center, e1)
        order = np.argsort(np.arctan2(P @ e2, P @ e1))
        return P[order]

    def area(self) -> float:
        center, radius = self.chebyshev()
        if center is None or radius <= EPS_GEOM:
            return 0.0
        V = self.vertices
        if len(V) == 0:
            if radius >= 0.5 * math.pi - 1e-9:
                return 2 * math.pi
            # corners lost to round-off in a sliver; area <= 2 * diameter
            return 4.0 * radius
        if len(V) == 2:
            # a lune: its inscribed diameter equals its angle
            return 4.0 * radius
        return sum(triangle_area(center, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))


def max_inscribed_circle(K: ConvexSphericalPolygon) -> tuple[UnitVector, float]:
    """Spherical Chebyshev centre of ``K`` and the diameter of its inscribed circle."""
    center, radius = K.chebyshev()
    if center is None or radius <= EPS_GEOM:
        raise DomainError("polygon is empty or degenerate")
    return center, 2.0 * radius
