import math
import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("svfold", deadline=None, max_examples=60)
settings.load_profile("svfold")


def sample_convex_polygon(rng, k=None):
    """Random convex spherical polygon inside a cap, as (vertices, polygon)."""
    from scipy.spatial import ConvexHull

    from svfold.geometry import ConvexSphericalPolygon, lonlat, normalize_rows
    from scipy.spatial.transform import Rotation

    k = k or int(rng.integers(3, 9))
    while True:
        r = rng.uniform(0.2, 1.2)
        ang = rng.uniform(0, 2 * math.pi, 3 * k)
        rad = r * np.sqrt(rng.uniform(0, 1, 3 * k))
        # points in a tangent disk mapped through the gnomonic chart stay convex-compatible
        pts = np.column_stack([np.tan(rad) * np.cos(ang), np.tan(rad) * np.sin(ang)])
        hull = ConvexHull(pts)
        if len(hull.vertices) >= 3:
            break
    P = pts[hull.vertices]
    V = normalize_rows(np.column_stack([P, np.ones(len(P))]))
    V = V @ Rotation.random(random_state=rng).as_matrix().T
    return V, ConvexSphericalPolygon.from_vertices(V)


def _oracle_imports():
    from svfold.geometry import Arc, point_arc_distance, spherical_distance, unit

    return Arc, point_arc_distance, spherical_distance, unit


def arc_distances(pts, e):
    n = e.normal
    h = pts @ n
    proj = pts - np.outer(h, n)
    proj /= np.linalg.norm(proj, axis=1, keepdims=True)
    inside = (np.cross(e.a, proj) @ n >= 0) & (np.cross(proj, e.b) @ n >= 0)
    ends = np.minimum(np.arccos(np.clip(pts @ e.a, -1, 1)), np.arccos(np.clip(pts @ e.b, -1, 1)))
    return np.where(inside, np.arcsin(np.minimum(1, np.abs(h))), ends)


def sampling_oracle(e1, e2, count=10_000, tol=1e-6):
    """Crossing of e2's circle between consecutive samples of e1, landing on e2.

    Returns None when the answer is within ``tol`` of ambiguous.
    """
    Arc, point_arc_distance, spherical_distance, unit = _oracle_imports()
    pts = e1.sample(count)
    off = pts @ e2.normal
    idx = np.flatnonzero(np.sign(off[:-1]) * np.sign(off[1:]) <= 0)
    for i in idx:
        t = off[i] / (off[i] - off[i + 1]) if off[i] != off[i + 1] else 0.0
        x = unit(pts[i] + t * (pts[i + 1] - pts[i]))
        if point_arc_distance(x, e2) <= tol:
            if min(spherical_distance(x, e2.a), spherical_distance(x, e2.b)) < tol:
                return None
            return True
    if arc_distances(pts, e2).min() < tol or arc_distances(e2.sample(count), e1).min() < tol:
        return None
    return False


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
