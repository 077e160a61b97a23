"""Expansive motion of a hemispherical subchain with a pinned edge.

With the first two points of a subchain pinned, its configuration is
determined by the turning angles at the remaining joints. Rotating the tail
about joint ``j`` changes that joint's turning angle and nothing else, so
joint rates are unconstrained coordinates for motions that preserve every
edge length, and vertex velocities are ``v_a = sum_{j<a} w_j (q_j x q_a)``.

Each step solves for joint rates that decrease ``<q_a, q_b>`` (increase the
distance) of every non-adjacent pair at rate at least ``t`` subject to
``|v| <= 1``, maximizing ``t``. Because every constraint is homogeneous
this is the least-norm problem ``min |v| s.t. -d/dt <q_a, q_b> >= 1``
rescaled to unit speed, a small dense strictly convex QP solved by a dual
active-set method. Joints that have straightened are frozen, and pairs
joined by a straight stretch are dropped since their distance is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import quadprog

from .chain import SphericalChain, turning_angles
from .errors import InvariantError, StepUnderflowError
from .geometry import distances, hemisphere_margin, normalize_rows, rotate
from .tolerances import DEFAULT, MONOTONE_SLACK, Tolerances


class Event(str, Enum):
    STRAIGHTENED = "Straightened"
    HITS_MEDIAN = "HitsMedianEquator"
    LEAVES_HEMISPHERE = "LeavesHemisphere"


@dataclass(eq=False)
class PinnedSubchain:
    """Local view of the part of a chain that moves in one phase.

    ``points[0]`` and ``points[1]`` are pinned. ``global_index`` maps each
    local point to its chain vertex, with ``None`` for the point where a
    separating edge meets the median. When ``bound_pole`` is set, moving
    points must keep a non-negative offset toward it.
    """

    points: np.ndarray
    global_index: tuple
    bound_pole: np.ndarray | None = None
    side: str = "whole"

    @property
    def m(self) -> int:
        return len(self.points) - 1

    @classmethod
    def whole(cls, chain: SphericalChain, bound_pole=None) -> "PinnedSubchain":
        """The whole chain with edge e_1 pinned."""
        return cls(np.array(chain.vertices), tuple(range(chain.n + 1)), bound_pole, "whole")

    @classmethod
    def from_separation(cls, chain: SphericalChain, sep, side: str) -> "PinnedSubchain":
        """One side of a separation, pinned on its clipped piece of the separating edge."""
        k = sep.edge_index
        V = chain.vertices
        if k == 0:
            return cls.whole(chain, sep.pole_witness)
        x = sep.crossing_point
        if side == "tail":
            idx = list(range(k, chain.n + 1))
            bound = -sep.pole_witness
        elif side == "head":
            idx = list(range(k - 1, -1, -1))
            bound = sep.pole_witness
        else:
            raise ValueError(f"unknown side {side!r}")
        pts = np.vstack([x[None, :], V[idx]])
        return cls(pts, (None, *idx), bound, side)

    def write_back(self, vertices: np.ndarray, local: np.ndarray) -> np.ndarray:
        out = np.array(vertices, dtype=float)
        for li, gi in enumerate(self.global_index):
            if gi is not None:
                out[gi] = local[li]
        return out


@dataclass
class VelocityField:
    joint_rates: np.ndarray  # rates for local joints 1 .. m-1
    velocities: np.ndarray  # per local point, zero for pinned ones
    slack: float  # guaranteed -d/dt <q_a, q_b> over active pairs
    straightened: bool = False
    feasible: bool = True


def strut_pairs(m: int, frozen: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-adjacent pairs (a, b) not joined by a stretch of frozen joints."""
    A, B = np.triu_indices(m + 1, k=2)
    if len(A) == 0:
        return A, B
    fz = np.concatenate([[False], frozen, [False]])  # indexed by local vertex
    csum = np.concatenate([[0], np.cumsum(~fz)])
    # active joints strictly between a and b
    live = csum[B] - csum[A + 1]
    keep = live > 0
    return A[keep], B[keep]


def expansive_velocity(points: np.ndarray, frozen: np.ndarray | None = None, tol: Tolerances = DEFAULT) -> VelocityField:
    """Unit-speed joint rates maximizing the slowest pair-distance growth."""
    Q = np.asarray(points, dtype=float)
    m = len(Q) - 1
    phi = turning_angles(Q)
    if frozen is None:
        frozen = np.abs(phi) <= tol.freeze
    zero = VelocityField(np.zeros(max(m - 1, 0)), np.zeros_like(Q), 0.0)
    active = np.flatnonzero(~frozen) + 1
    if len(active) == 0:
        zero.straightened = True
        return zero
    J = np.cross(Q[active][None, :, :], Q[:, None, :])
    J *= (active[None, :] < np.arange(m + 1)[:, None])[..., None]
    G = np.einsum("ajk,aik->ji", J, J)
    A, B = strut_pairs(m, frozen)
    trip = np.cross(Q[active][None, :, :], Q[B][:, None, :])
    C = np.einsum("pk,pjk->pj", Q[A], trip)
    C *= (active[None, :] > A[:, None]) & (active[None, :] < B[:, None])
    E = -C
    # unit-diagonal scaling of G and one global factor on E keep near-straight
    # joints, whose coefficients are tiny, from wrecking the conditioning;
    # neither changes the optimal direction
    d = np.sqrt(np.diag(G))
    Es = E / d
    Es /= np.abs(Es).max()
    Gs = G / np.outer(d, d)
    try:
        psi = quadprog.solve_qp(Gs, np.zeros(len(active)), Es.T.copy(), np.ones(len(A)))[0]
    except ValueError:
        # a strut across an almost straight joint has a tiny row and forces
        # huge rates; unit rows keep the same cone Ew > 0 and still give an
        # expansive, if no longer max-min, direction
        En = Es / np.maximum(np.linalg.norm(Es, axis=1), 1e-300)[:, None]
        try:
            psi = quadprog.solve_qp(Gs, np.zeros(len(active)), En.T.copy(), np.ones(len(A)))[0]
        except ValueError:
            zero.feasible = False
            return zero
    w = psi / d
    w /= math.sqrt(float(w @ G @ w))
    rates = np.zeros(m - 1)
    rates[active - 1] = w
    vel = np.einsum("ajk,j->ak", J, w)
    slack = float((E @ w).min())
    if slack <= 0.0:
        zero.feasible = False
        return zero
    return VelocityField(rates, vel, slack)


def advance(points: np.ndarray, dtheta: np.ndarray) -> np.ndarray:
    """Rotate the tail about each joint by the given angle (tip first)."""
    Q = np.array(points, dtype=float)
    for j in range(len(dtheta), 0, -1):
        d = dtheta[j - 1]
        if d != 0.0:
            Q[j + 1 :] = rotate(Q[j + 1 :], Q[j], d)
    # pinned points are never touched, not even by renormalization
    Q[2:] = normalize_rows(Q[2:])
    return Q


@dataclass
class PhaseSegment:
    """Stored steps of one phase, in the subchain's local point order."""

    times: list = field(default_factory=list)
    points: list = field(default_factory=list)
    event: Event | None = None
    steps: int = 0
    rejected: int = 0
    min_slack: float = math.inf
    frozen_at: dict = field(default_factory=dict)  # local joint -> step index

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def _bisect(f, lo: float, hi: float, width: float) -> tuple[float, float]:
    """Shrink [lo, hi] with f(lo) false and f(hi) true until hi - lo <= width."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if f(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def integrate_phase(sub: PinnedSubchain, hemisphere: bool = False, tol: Tolerances = DEFAULT, t0: float = 0.0) -> tuple[np.ndarray, PhaseSegment]:
    """Expand ``sub`` until it straightens or an event stops it.

    Events: a joint reaching zero turning (closed form, the joint is then
    frozen); a moving point reaching the bounding circle (``HitsMedian``,
    located by bisection and stopped on the inner side); and, with
    ``hemisphere=True``, the hemisphere margin of the whole subchain
    dropping to ``tol.hemi`` (``LeavesHemisphere``, stopped on the outer
    side so that reclassification sees a non-hemispherical chain). Steps
    are halved whenever a non-adjacent distance would decrease by more
    than ``tol.step_slack``.
    """
    Q = np.array(sub.points, dtype=float)
    m = sub.m
    seg = PhaseSegment(times=[t0], points=[Q.copy()])
    if m < 2:
        seg.event = Event.STRAIGHTENED
        return Q, seg
    pa, pb = np.triu_indices(m + 1, k=2)
    bound = sub.bound_pole
    t = t0
    h = tol.h_init
    phi = turning_angles(Q)
    frozen = np.abs(phi) <= tol.freeze

    def margin(P):
        return hemisphere_margin(P)[0]

    while True:
        if frozen.all():
            seg.event = Event.STRAIGHTENED
            break
        if seg.steps >= tol.max_steps_per_phase:
            raise InvariantError(f"phase exceeded {tol.max_steps_per_phase} steps", instance=sub)
        vf = expansive_velocity(Q, frozen, tol)
        if not vf.feasible:
            if hemisphere:
                # stalled against the hemisphere boundary
                seg.event = Event.LEAVES_HEMISPHERE
                break
            raise InvariantError("no expansive motion for a non-straight hemispherical subchain", instance=sub)
        seg.min_slack = min(seg.min_slack, vf.slack)
        d_old = distances(Q[pa], Q[pb])
        while True:
            dtheta = h * vf.joint_rates
            s_max, hit = 1.0, None
            for j in np.flatnonzero(~frozen):
                new = phi[j] + dtheta[j]
                if dtheta[j] != 0.0 and phi[j] * new <= 0.0:
                    s = -phi[j] / dtheta[j]
                    if s < s_max:
                        s_max, hit = s, j
            Qn = advance(Q, s_max * dtheta)
            drop = float((distances(Qn[pa], Qn[pb]) - d_old).min())
            if drop >= -tol.step_slack:
                break
            seg.rejected += 1
            h *= 0.5
            if h < tol.h_min:
                raise StepUnderflowError(f"step size fell below {tol.h_min} (distance drop {drop:.3g})", instance=sub)
        s_end, event = s_max, None
        width = tol.event / h
        if bound is not None and float((Qn[2:] @ bound).min()) < 0.0:

            def crossed(s):
                return float((advance(Q, s * dtheta)[2:] @ bound).min()) < 0.0

            lo, _ = _bisect(crossed, 0.0, s_max, width)
            s_end, event, hit = lo, Event.HITS_MEDIAN, None
        if hemisphere and margin(Qn) <= tol.hemi:

            def left(s):
                return margin(advance(Q, s * dtheta)) <= tol.hemi

            _, hi = _bisect(left, 0.0, s_end, width)
            if event is None or hi <= s_end:
                s_end, event, hit = hi, Event.LEAVES_HEMISPHERE, None
        if s_end != s_max:
            Qn = advance(Q, s_end * dtheta)
        t += s_end * h
        Q = Qn
        phi = turning_angles(Q)
        if hit is not None:
            phi[hit] = 0.0
        newly = (np.abs(phi) <= tol.freeze) & ~frozen
        for j in np.flatnonzero(newly):
            seg.frozen_at[int(j) + 1] = seg.steps + 1
        frozen |= newly
        seg.steps += 1
        seg.times.append(t)
        seg.points.append(Q.copy())
        if event is not None:
            seg.event = event
            break
        h = min(2.0 * h, tol.h_max)
    return Q, seg


@dataclass(frozen=True)
class TraceReport:
    ok: bool
    failures: tuple[str, ...] = ()
    min_distance_change: float = 0.0
    min_beta_change: float = 0.0

    def __bool__(self):
        return self.ok


def check_expansive_trace(segment: PhaseSegment | list, slack: float = MONOTONE_SLACK, length_tol: float = 1e-9) -> TraceReport:
    """Re-verify lengths, pair distances and joint angles along a segment."""
    pts = segment.points if isinstance(segment, PhaseSegment) else list(segment)
    failures = []
    if len(pts) < 2:
        return TraceReport(True)
    P = np.array(pts)
    m = P.shape[1] - 1
    lengths = distances(P[:, :-1], P[:, 1:])
    drift = np.abs(lengths - lengths[0]).max()
    if drift > length_tol:
        failures.append(f"edge length drift {drift:.3g}")
    pa, pb = np.triu_indices(m + 1, k=2)
    dd = np.diff(distances(P[:, pa], P[:, pb]), axis=0)
    min_dd = float(dd.min()) if dd.size else 0.0
    if min_dd < -slack:
        step, pair = np.unravel_index(int(np.argmin(dd)), dd.shape)
        failures.append(f"distance {int(pa[pair])}-{int(pb[pair])} decreased by {-min_dd:.3g} at step {int(step) + 1}")
    beta = math.pi - np.abs(np.array([turning_angles(p) for p in pts]))
    db = np.diff(beta, axis=0)
    min_db = float(db.min()) if db.size else 0.0
    if min_db < -slack:
        step, joint = np.unravel_index(int(np.argmin(db)), db.shape)
        failures.append(f"beta at joint {int(joint) + 1} decreased by {-min_db:.3g} at step {int(step) + 1}")
    return TraceReport(not failures, tuple(failures), min_dd, min_db)
