import math

import numpy as np
import pytest

from svfold.chain import SphericalChain, forward_kinematics, random_chain, self_intersects, turning_angles
from svfold.errors import StepUnderflowError
from svfold.expander import (
    Event,
    PhaseSegment,
    PinnedSubchain,
    advance,
    check_expansive_trace,
    expansive_velocity,
    integrate_phase,
    strut_pairs,
)
from svfold.geometry import distances, hemisphere_margin, lonlat, rotate
from svfold.planner import choose_moving_side
from svfold.separation import find_separation
from svfold.tolerances import DEFAULT, EPS_EVENT, EPS_FLAT, EPS_GEOM, EPS_HEMI, Tolerances

PI = math.pi


def two_edge(phi=1.0, lengths=(1.0, 1.2)):
    return SphericalChain(forward_kinematics(lengths, [phi]))


def residuals(Q, vf):
    v = vf.velocities
    bars = np.einsum("ij,ij->i", v[:-1], Q[1:]) + np.einsum("ij,ij->i", Q[:-1], v[1:])
    tang = np.einsum("ij,ij->i", Q, v)
    return np.abs(bars).max(), np.abs(tang).max()


def test_straight_subchain_is_straightened():
    c = SphericalChain([lonlat(a) for a in (0, 0.5, 1.1, 1.6)])
    vf = expansive_velocity(c.vertices)
    assert vf.straightened
    _, seg = integrate_phase(PinnedSubchain.whole(c))
    assert seg.event is Event.STRAIGHTENED and seg.steps == 0


@pytest.mark.parametrize("phi", [1.0, -2.0, 0.3, -0.01])
def test_two_edge_velocity_opens_the_joint(phi):
    Q = two_edge(phi).vertices
    vf = expansive_velocity(Q)
    assert np.sign(vf.joint_rates[0]) == -np.sign(phi)
    assert np.array_equal(vf.velocities[:2], np.zeros((2, 3)))
    # the single strut (0, 2): cosine decreases
    assert -float(vf.velocities[2] @ Q[0]) > 0


def test_velocity_constraint_residuals_on_random_chains():
    rng = np.random.default_rng(0)
    for i in range(200):
        c = random_chain(int(rng.integers(2, 10)), rng.uniform(0.2, 0.95) * PI, i)
        Q = c.vertices
        vf = expansive_velocity(Q)
        assert vf.feasible and not vf.straightened
        bar, tang = residuals(Q, vf)
        assert bar <= 1e-10 and tang <= 1e-12
        assert np.array_equal(vf.velocities[:2], np.zeros((2, 3)))
        assert math.isclose(float(np.sum(vf.velocities**2)), 1.0, rel_tol=1e-9)
        A, B = np.triu_indices(len(Q), k=2)
        rate = -(np.einsum("ij,ij->i", vf.velocities[A], Q[B]) + np.einsum("ij,ij->i", Q[A], vf.velocities[B]))
        assert rate.min() >= vf.slack * (1 - 1e-7) > 0


def test_velocity_is_maximin_against_random_directions():
    # no unit-speed direction in joint space beats the returned slack
    rng = np.random.default_rng(1)
    c = random_chain(5, 2.5, 4)
    Q = c.vertices
    vf = expansive_velocity(Q)
    m = len(Q) - 1
    A, B = np.triu_indices(m + 1, k=2)
    for _ in range(2000):
        w = rng.standard_normal(m - 1)
        V = np.zeros_like(Q)
        for a in range(m + 1):
            for j in range(1, min(a, m)):
                V[a] += w[j - 1] * np.cross(Q[j], Q[a])
        V /= np.linalg.norm(V)
        rate = -(np.einsum("ij,ij->i", V[A], Q[B]) + np.einsum("ij,ij->i", Q[A], V[B]))
        assert rate.min() <= vf.slack + 1e-9


def test_finite_difference_of_pair_distances():
    # forward differences at h = 1e-3 and 1e-4 converge to the analytic rate at first order
    rng = np.random.default_rng(2)
    for i in range(20):
        c = random_chain(int(rng.integers(3, 8)), rng.uniform(0.3, 0.9) * PI, 100 + i)
        Q = c.vertices
        vf = expansive_velocity(Q)
        A, B = np.triu_indices(len(Q), k=2)
        d0 = distances(Q[A], Q[B])
        dcos = np.einsum("ij,ij->i", vf.velocities[A], Q[B]) + np.einsum("ij,ij->i", Q[A], vf.velocities[B])
        analytic = -dcos / np.sin(d0)
        err = []
        for h in (1e-3, 1e-4):
            P = advance(Q, h * vf.joint_rates)
            err.append(np.abs((distances(P[A], P[B]) - d0) / h - analytic).max())
        assert err[1] <= 0.15 * err[0] + 1e-9
        assert err[1] <= 1e3 * 1e-4


def test_strut_pairs_drop_straight_stretches():
    A, B = strut_pairs(4, np.array([False, True, False]))
    pairs = set(zip(A.tolist(), B.tolist()))
    assert (1, 3) not in pairs and (0, 2) in pairs and (1, 4) in pairs
    A, B = strut_pairs(3, np.array([True, True]))
    assert len(A) == 0


def closed_form_two_edge(Q0, beta_target, phi0):
    """p_2 after opening the joint of a pinned 2-edge chain to beta_target."""
    phi = math.copysign(PI - beta_target, phi0)
    return rotate(Q0[2], Q0[1], phi - phi0)


@pytest.mark.parametrize("phi0", [2.5, -1.0, 0.2])
def test_two_edge_integration_matches_closed_form(phi0):
    c = two_edge(phi0)
    Q0 = c.vertices
    Q, seg = integrate_phase(PinnedSubchain.whole(c))
    assert seg.event is Event.STRAIGHTENED
    assert PI - abs(turning_angles(Q)[0]) >= PI - EPS_FLAT
    for P in seg.points:
        beta = PI - abs(turning_angles(P)[0])
        assert np.array_equal(P[:2], Q0[:2])
        assert np.abs(P[2] - closed_form_two_edge(Q0, beta, phi0)).max() <= 1e-6
    report = check_expansive_trace(seg)
    assert report and report.min_beta_change > 0


def test_check_expansive_trace_rejects_contraction():
    c = two_edge(1.0)
    Q0 = c.vertices
    closing = [advance(Q0, np.array([s])) for s in np.linspace(0, 0.5, 6)]  # turning grows: beta shrinks
    report = check_expansive_trace(closing)
    assert not report and any("decreased" in f for f in report.failures)
    stretched = [Q0, np.vstack([Q0[:2], lonlat(2.5, 0.4)])]
    assert not check_expansive_trace(stretched)


def test_step_underflow_is_reported():
    c = random_chain(4, 2.0, 0)
    tol = Tolerances(step_slack=-1.0)
    with pytest.raises(StepUnderflowError):
        integrate_phase(PinnedSubchain.whole(c), tol=tol)


def test_whole_chain_phase_leaves_hemisphere():
    rng = np.random.default_rng(3)
    seen = 0
    for i in range(40):
        c = random_chain(int(rng.integers(3, 8)), rng.uniform(1.1, 1.6) * PI, i)
        if hemisphere_margin(c.vertices)[0] <= 1e-3:
            continue
        Q, seg = integrate_phase(PinnedSubchain.whole(c), hemisphere=True)
        assert check_expansive_trace(seg)
        if seg.event is Event.LEAVES_HEMISPHERE and seg.steps:
            assert hemisphere_margin(Q)[0] <= EPS_HEMI
            assert hemisphere_margin(seg.points[-2])[0] > EPS_HEMI
            seen += 1
    assert seen >= 5


def test_short_whole_chain_straightens_inside_hemisphere():
    c = random_chain(6, 2.5, 5)
    Q, seg = integrate_phase(PinnedSubchain.whole(c), hemisphere=True)
    assert seg.event is Event.STRAIGHTENED
    assert all(hemisphere_margin(P)[0] > EPS_HEMI for P in seg.points)


def _subchain_phases(count, seed0=0):
    rng = np.random.default_rng(seed0)
    out = []
    i = 0
    while len(out) < count:
        i += 1
        c = random_chain(int(rng.integers(3, 9)), rng.uniform(1.3, 1.95) * PI, seed0 + i)
        sep = find_separation(c)
        if sep.edge_index == 0:
            continue
        side = choose_moving_side(sep, c)
        sub = PinnedSubchain.from_separation(c, sep, side)
        if sub.m < 2:
            continue
        out.append((c, sep, sub) + integrate_phase(sub))
    return out


def test_subchain_phases_stay_in_hemisphere_and_expand():
    for c, sep, sub, Q, seg in _subchain_phases(25):
        assert check_expansive_trace(seg)
        for P in seg.points:
            assert np.array_equal(P[:2], sub.points[:2])
            assert (P[2:] @ sub.bound_pole).min() >= -EPS_GEOM
            assert not self_intersects(sub.write_back(c.vertices, P))
        if seg.event is Event.HITS_MEDIAN:
            off = Q[2:] @ sub.bound_pole
            assert 0 <= off.min() <= EPS_EVENT
        else:
            assert seg.event is Event.STRAIGHTENED


def test_subchain_starts_in_closed_hemisphere():
    for c, sep, sub, Q, seg in _subchain_phases(10, 500):
        assert (sub.points @ sub.bound_pole).min() >= -EPS_GEOM
        assert abs(sub.points[0] @ sub.bound_pole) <= 1e-12


def test_hits_median_event_occurs():
    hits = [seg for *_, seg in _subchain_phases(40, 900) if seg.event is Event.HITS_MEDIAN]
    assert hits


def test_nearly_straight_joint_still_has_expansive_motion():
    # joint 1 turns by about -1.3e-8, just above the freeze threshold; the
    # strut across it has a tiny row and the max-min problem is numerically
    # inconsistent
    Q = np.array([
        [0.915575678106627, -0.3844014145436814, 0.11813860569859015],
        [0.8345569034428298, 0.14350702078827113, 0.5319027259757088],
        [-0.44683119239332547, 0.775007384904513, 0.4468841447711332],
        [-0.42526431606075993, 0.8871192128540312, -0.1793593144239192],
    ])
    phi = turning_angles(Q)
    assert DEFAULT.freeze < abs(phi[0]) < 1e-7
    vf = expansive_velocity(Q)
    assert vf.feasible and vf.slack > 0
    sub = PinnedSubchain(Q, (None, 2, 1, 0), np.array([0.32526835, 0.88061983, 0.34454203]), "head")
    Qe, seg = integrate_phase(sub)
    assert check_expansive_trace(seg).ok
