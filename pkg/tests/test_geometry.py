import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from svfold.errors import DomainError
from svfold.geometry import (
    Arc,
    ConvexSphericalPolygon,
    GreatCircle,
    Lune,
    arcs_intersect,
    canonical_pole,
    circle_crosses_arc,
    dual,
    hemisphere_margin,
    lonlat,
    lune_area,
    max_inscribed_circle,
    min_norm_point,
    point_arc_distance,
    random_unit_vectors,
    rotate,
    spherical_distance,
    unit,
)

from conftest import sample_convex_polygon, sampling_oracle

deg = math.radians
unit_vec = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3)


@pytest.mark.parametrize(
    "p, q, want",
    [((1, 0, 0), (0, 1, 0), math.pi / 2), ((1, 0, 0), (1, 0, 0), 0.0), ((1, 0, 0), (-1, 0, 0), math.pi)],
)
def test_spherical_distance_examples(p, q, want):
    assert spherical_distance(p, q) == pytest.approx(want, abs=1e-15)


def test_distance_is_accurate_for_tiny_angles():
    # arccos would lose everything below ~1e-8
    p = lonlat(0.0)
    q = lonlat(1e-12)
    assert spherical_distance(p, q) == pytest.approx(1e-12, rel=1e-9)


@given(unit_vec)
def test_unit_constructor_normalizes(v):
    assert abs(np.linalg.norm(unit(v)) - 1.0) <= 1e-12


def test_dual_examples():
    assert np.allclose(dual(GreatCircle((0, 0, 1))), (0, 0, 1))
    c = GreatCircle.through((1, 0, 0), (0, 0, 1))
    assert np.allclose(np.abs(dual(c)), (0, 1, 0))
    assert dual(dual(c)) == c


def test_dual_involution_on_random_circles():
    rng = np.random.default_rng(0)
    for v in random_unit_vectors(rng, 1000):
        c = GreatCircle(v)
        assert np.max(np.abs(dual(dual(c)).pole - c.pole)) <= 1e-12


def test_canonical_pole_is_a_function_of_the_circle():
    rng = np.random.default_rng(1)
    for v in random_unit_vectors(rng, 200):
        assert np.array_equal(canonical_pole(v), canonical_pole(-v))


def test_arc_rejects_long_and_degenerate():
    with pytest.raises(DomainError):
        Arc((1, 0, 0), (-1, 0, 0))
    with pytest.raises(DomainError):
        Arc((1, 0, 0), (1, 0, 0))
    with pytest.raises(DomainError):
        Arc((1, 0, 0), lonlat(math.pi - 1e-12))


def test_circle_crosses_arc_examples():
    arc = Arc(lonlat(0), lonlat(deg(90)))
    meridian = GreatCircle.through(lonlat(deg(45)), (0, 0, 1))
    assert circle_crosses_arc(meridian, arc)
    high = Arc(lonlat(0, 0.3), lonlat(1.0, 0.2))
    assert not circle_crosses_arc(GreatCircle((0, 0, 1)), high)
    through_end = GreatCircle.through(lonlat(0), (0, 0, 1))
    res = circle_crosses_arc(through_end, arc)
    assert res.degenerate


def test_crossing_matches_dual_lune_membership():
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(2000):
        a, b = random_unit_vectors(rng, 2)
        if spherical_distance(a, b) > math.pi - 1e-3:
            continue
        e = Arc(a, b)
        c = GreatCircle(random_unit_vectors(rng, 1)[0])
        res = circle_crosses_arc(c, e)
        if res.degenerate:
            continue
        # poles of crossing circles: opposite signs against the two endpoints
        q = c.pole
        in_lune = (q @ a > 0 and q @ b < 0) or (q @ a < 0 and q @ b > 0)
        assert bool(res) == in_lune
        checked += 1
    assert checked > 1500


def test_arcs_intersect_examples():
    eq = Arc(lonlat(0), lonlat(deg(90)))
    mer = Arc(lonlat(deg(45), deg(-45)), lonlat(deg(45), deg(45)))
    hit = arcs_intersect(eq, mer)
    assert hit and np.allclose(hit.point, lonlat(deg(45)), atol=1e-12)
    a = Arc(lonlat(deg(10), deg(20)), lonlat(deg(60), deg(40)))  # octant x,y,z > 0
    b = Arc(lonlat(deg(-170), deg(-20)), lonlat(deg(-120), deg(-40)))  # x,y,z < 0
    assert not arcs_intersect(a, b)
    overlap = arcs_intersect(eq, Arc(lonlat(deg(45)), lonlat(deg(135))))
    assert overlap and overlap.collinear and not overlap.endpoint_only


def test_collinear_arcs_touching_and_apart():
    e1 = Arc(lonlat(0), lonlat(1.0))
    touch = arcs_intersect(e1, Arc(lonlat(1.0), lonlat(2.0)))
    assert touch and touch.endpoint_only
    assert not arcs_intersect(e1, Arc(lonlat(1.5), lonlat(2.5)))
    # reversed orientation on the same circle
    assert arcs_intersect(e1, Arc(lonlat(1.5), lonlat(0.5)))


def test_arcs_intersect_matches_dense_sampling_oracle():
    rng = np.random.default_rng(3)
    agree = hits = 0
    for _ in range(1000):
        # short arcs near each other so that hits are common
        c = random_unit_vectors(rng, 1)[0]
        pts = [unit(c + 0.7 * rng.standard_normal(3)) for _ in range(4)]
        try:
            e1, e2 = Arc(pts[0], pts[1]), Arc(pts[2], pts[3])
        except DomainError:
            continue
        want = sampling_oracle(e1, e2)
        if want is None:
            continue
        got = bool(arcs_intersect(e1, e2))
        assert got == want
        agree += 1
        hits += got
    assert agree > 900 and hits > 100


def test_point_arc_distance():
    e = Arc(lonlat(0), lonlat(1.0))
    assert point_arc_distance(lonlat(0.5, 0.2), e) == pytest.approx(0.2, abs=1e-14)
    assert point_arc_distance(lonlat(1.3), e) == pytest.approx(0.3, abs=1e-14)


@pytest.mark.parametrize("span, area", [(math.pi / 2, math.pi), (0.3, 0.6)])
def test_lune_area(span, area):
    assert lune_area(span) == pytest.approx(area, abs=1e-12)


def test_lune_area_rejects_half_sphere():
    with pytest.raises(DomainError):
        lune_area(math.pi)


def test_dual_lune_of_arc():
    e = Arc(lonlat(0), lonlat(0.8))
    lune = Lune.dual_of_arc(e)
    assert lune.area == pytest.approx(1.6, abs=1e-12)


def test_min_norm_point_matches_qp():
    from scipy.optimize import minimize

    rng = np.random.default_rng(4)
    for _ in range(50):
        P = random_unit_vectors(rng, int(rng.integers(2, 7))) + rng.uniform(-0.3, 0.3, 3)
        x = min_norm_point(P)
        k = len(P)
        res = minimize(
            lambda lam: float(np.sum((lam @ P) ** 2)),
            np.full(k, 1 / k),
            constraints=[{"type": "eq", "fun": lambda lam: lam.sum() - 1}],
            bounds=[(0, 1)] * k,
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 500},
        )
        assert np.linalg.norm(x) <= np.linalg.norm(res.x @ P) + 1e-7


def test_hemisphere_margin():
    P = np.array([lonlat(a, 0.3) for a in np.linspace(0, 5, 6)])
    m, w = hemisphere_margin(P)
    assert m > 0 and np.all(P @ w >= m - 1e-12)
    ring = np.array([lonlat(a) for a in (0, math.pi / 2, math.pi, 3 * math.pi / 2)])
    assert hemisphere_margin(ring)[0] <= 1e-12


def test_inscribed_circle_of_lune_is_its_span():
    w = 0.9
    K = ConvexSphericalPolygon([(0, 1, 0), rotate(np.array([0.0, -1.0, 0.0]), (0, 0, 1), w)])
    center, d = max_inscribed_circle(K)
    assert d == pytest.approx(w, abs=1e-12)
    assert K.area() == pytest.approx(2 * w, abs=1e-12)


def test_regular_quadrilateral_centred_at_pole():
    V = [lonlat(a, 1.0) for a in (0.3, 0.3 + math.pi / 2, 0.3 + math.pi, 0.3 + 1.5 * math.pi)]
    center, d = max_inscribed_circle(ConvexSphericalPolygon.from_vertices(V))
    assert np.allclose(center, (0, 0, 1), atol=1e-12)


def test_octant_area():
    K = ConvexSphericalPolygon(np.eye(3))
    assert K.area() == pytest.approx(math.pi / 2, abs=1e-12)
    assert K.contains((1, 1, 1))
    assert not K.contains((-1, 1, 1))


def test_empty_polygon_rejected():
    K = ConvexSphericalPolygon([(0, 0, 1), (0, 0, -1), (1, 0, 0)])
    with pytest.raises(DomainError):
        max_inscribed_circle(K)
    assert K.area() == 0.0


def test_from_vertices_rejects_nonconvex():
    V = [lonlat(0, 0.5), lonlat(1, 0.5), lonlat(0.5, 0.9), lonlat(2, 0.5)]
    with pytest.raises(DomainError):
        ConvexSphericalPolygon.from_vertices([V[0], V[2], V[1], V[3]])


def test_polygon_area_matches_monte_carlo():
    rng = np.random.default_rng(5)
    for _ in range(10):
        V, K = sample_convex_polygon(rng)
        pts = random_unit_vectors(rng, 200_000)
        f = K.contains(pts).mean()
        est, se = 4 * math.pi * f, 4 * math.pi * math.sqrt(f * (1 - f) / len(pts))
        assert abs(K.area() - est) <= 4 * se + 1e-9


def test_polygon_edges_support_all_vertices():
    rng = np.random.default_rng(6)
    for _ in range(50):
        V, K = sample_convex_polygon(rng)
        assert (V @ K.normals.T).min() >= -1e-10
