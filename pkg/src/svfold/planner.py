"""Phase loop that straightens a chain, and an independent trajectory checker.

Each phase starts by reclassifying the current chain. Flat chains are done.
Hemispherical chains are expanded whole with e_1 pinned until they straighten
or stop being hemispherical. Any other chain is split by a certified belt, and
one side is expanded inside its hemisphere until it straightens or touches
the median of the belt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .chain import TWO_PI, LONG_CHAIN_REASON, ChainClass, SphericalChain, classify, self_intersects, turning_angles
from .errors import DomainError, InvariantError
from .expander import Event, PinnedSubchain, integrate_phase
from .geometry import distances, normalize_rows, spherical_distance
from .separation import Belt, SeparationResult, find_separation
from .tolerances import DEFAULT, MONOTONE_SLACK, Tolerances


TIE_TOL = 1e-12


class PhaseKind(str, Enum):
    WHOLE = "WholeHemisphere"
    SUBCHAIN = "SubchainExpansion"


@dataclass
class PhaseRecord:
    """What one phase did.

    ``delta`` is the gain in the total joint angle. For subchain phases
    ``displaced_vertex`` is the vertex that reached the median (or, if the
    side straightened first, the one that moved furthest) and
    ``displacement`` its distance from where it started.
    """

    index: int
    kind: PhaseKind
    side: str
    event: Event
    belt: Belt | None
    edge_index: int | None
    delta: float
    displaced_vertex: int | None
    displacement: float
    deficits: tuple[float, float] | None
    steps: int
    t_start: float
    t_end: float
    first_snapshot: int
    last_snapshot: int


@dataclass
class Trajectory:
    """Time-stamped configurations plus phase records.

    Configurations are kept as one ``(S, n+1, 3)`` array; ``snapshots``
    wraps them as chains on demand.
    """

    arc_lengths: np.ndarray
    times: np.ndarray
    configs: np.ndarray
    phases: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.arc_lengths)

    @property
    def total(self) -> float:
        return float(np.sum(self.arc_lengths))

    @property
    def phase_count(self) -> int:
        return len(self.phases)

    @property
    def snapshots(self) -> list[tuple[float, SphericalChain]]:
        return [(float(t), SphericalChain(v, self.arc_lengths)) for t, v in zip(self.times, self.configs)]

    @property
    def final(self) -> SphericalChain:
        return SphericalChain(self.configs[-1], self.arc_lengths)


def phase_bound(n: int, alpha: float) -> int:
    """ceil(2*pi*alpha*(n+2)*(n-1) / (2*pi - alpha))."""
    if not 0.0 < alpha < TWO_PI:
        raise DomainError(f"total length {alpha} rejected: {LONG_CHAIN_REASON}")
    return math.ceil(TWO_PI * alpha * (n + 2) * (n - 1) / (TWO_PI - alpha))


def side_deficits(sep: SeparationResult, chain: SphericalChain) -> tuple[float, float]:
    """Flatness deficits sum(pi - beta_i) of the head and tail sides."""
    defect = np.abs(turning_angles(chain.vertices))  # pi - beta_i for i = 1 .. n-1
    k = sep.edge_index
    if k == 0:
        return float(defect.sum()), 0.0
    return float(defect[: k - 1].sum()), float(defect[k - 1 :].sum())


def choose_moving_side(sep: SeparationResult, chain: SphericalChain) -> str:
    """Side with the larger deficit; ties go to the side holding p_0."""
    if sep.edge_index == 0:
        return "whole"
    head, tail = side_deficits(sep, chain)
    # deficits equal up to summation round-off count as a tie
    return "tail" if tail > head + TIE_TOL * max(1.0, head) else "head"


def _delta(V: np.ndarray) -> float:
    return float(np.sum(math.pi - np.abs(turning_angles(V))))


def flatten(chain: SphericalChain, tol: Tolerances = DEFAULT) -> Trajectory:
    """Straighten ``chain`` and return the whole motion.

    Raises ``InvariantError`` if the number of phases would exceed
    ``phase_bound``; errors from separation or integration propagate.
    """
    if self_intersects(chain):
        raise DomainError("input chain self-intersects")
    n, alpha = chain.n, chain.total
    bound = phase_bound(n, alpha)
    lengths = np.array(chain.arc_lengths)
    V = np.array(chain.vertices)
    times, configs, phases = [0.0], [V.copy()], []
    t = 0.0
    force_split = False
    while True:
        cur = SphericalChain(V, lengths)
        state = classify(cur, tol.flat, tol.hemi)
        if state is ChainClass.FLAT:
            break
        if len(phases) >= bound:
            raise InvariantError(f"phase count exceeded the bound {bound}", instance=cur)
        sep, deficits = None, None
        if state is ChainClass.HEMISPHERICAL and not force_split:
            sub, kind, side = PinnedSubchain.whole(cur), PhaseKind.WHOLE, "whole"
        else:
            sep = find_separation(cur, tol.belt)
            deficits = side_deficits(sep, cur)
            side = choose_moving_side(sep, cur)
            sub, kind = PinnedSubchain.from_separation(cur, sep, side), PhaseKind.SUBCHAIN
        _, seg = integrate_phase(sub, hemisphere=kind is PhaseKind.WHOLE, tol=tol, t0=t)
        force_split = seg.event is Event.LEAVES_HEMISPHERE
        start = len(configs) - 1
        V0 = V
        for ts, P in zip(seg.times[1:], seg.points[1:]):
            V = sub.write_back(V, P)
            times.append(ts)
            configs.append(V)
        t = seg.times[-1]
        moved = distances(V0, V)
        j = None
        if seg.event is Event.HITS_MEDIAN:
            movers = list(sub.global_index[2:])
            offs = V[movers] @ sub.bound_pole
            j = movers[int(np.argmin(offs))]
        elif len(seg.points) > 1:
            j = int(np.argmax(moved))
        phases.append(
            PhaseRecord(
                index=len(phases),
                kind=kind,
                side=side,
                event=seg.event,
                belt=sep.belt if sep else None,
                edge_index=sep.edge_index if sep else None,
                delta=_delta(V) - _delta(V0),
                displaced_vertex=j,
                displacement=float(moved[j]) if j is not None else 0.0,
                deficits=deficits,
                steps=seg.steps,
                t_start=seg.times[0],
                t_end=t,
                first_snapshot=start,
                last_snapshot=len(configs) - 1,
            )
        )
    return Trajectory(lengths, np.array(times), np.array(configs), phases)


@dataclass
class VerificationReport:
    ok: bool
    violations: list
    checks: dict

    def __bool__(self):
        return self.ok

    def kinds(self) -> set[str]:
        return {v.split(":", 1)[0] for v in self.violations}


def verify_trajectory(
    traj: Trajectory,
    length_tol: float = 1e-7,
    slack: float = MONOTONE_SLACK,
    endpoint_tol: float = 1e-6,
    progress_tol: float = 1e-6,
    tol: Tolerances = DEFAULT,
) -> VerificationReport:
    """Recheck a trajectory from its stored configurations alone.

    Violations are strings prefixed by the failing check: ``length``,
    ``intersection``, ``monotonicity``, ``flatness``, ``phase-bound``,
    ``endpoints`` or ``progress``.
    """
    V = np.asarray(traj.configs, dtype=float)
    L = np.asarray(traj.arc_lengths, dtype=float)
    n, alpha = len(L), float(L.sum())
    out: list[str] = []
    checks: dict = {}

    err = np.abs(distances(V[:, :-1], V[:, 1:]) - L)
    checks["max_length_error"] = float(err.max())
    for s, i in zip(*np.nonzero(err > length_tol)):
        out.append(f"length: snapshot {int(s)} edge {int(i) + 1} off by {err[s, i]:.3g}")

    norm_err = np.abs(np.linalg.norm(V, axis=2) - 1.0).max()
    if norm_err > length_tol:
        out.append(f"length: vertices leave the sphere by {norm_err:.3g}")

    crossing = [s for s in range(len(V)) if self_intersects(V[s])]
    T = np.asarray(traj.times, dtype=float)
    for s in np.flatnonzero(np.diff(T) > 1e-2):
        mid = normalize_rows(V[s] + V[s + 1])
        if self_intersects(mid):
            out.append(f"intersection: midpoint after snapshot {int(s)} self-intersects")
    for s in crossing:
        out.append(f"intersection: snapshot {s} self-intersects")
    checks["intersecting_snapshots"] = len(crossing)

    beta = math.pi - np.abs(np.array([turning_angles(v) for v in V])) if n > 1 else np.zeros((len(V), 0))
    if len(V) > 1 and n > 1:
        dbeta = np.diff(beta, axis=0)
        ddelta = np.diff(beta.sum(axis=1))
        checks["min_beta_change"] = float(dbeta.min())
        checks["min_delta_change"] = float(ddelta.min())
        for s in np.flatnonzero(ddelta < -slack):
            out.append(f"monotonicity: total angle drops by {-ddelta[s]:.3g} after snapshot {int(s)}")
        for s, i in zip(*np.nonzero(dbeta < -slack)):
            out.append(f"monotonicity: beta_{int(i) + 1} drops by {-dbeta[s, i]:.3g} after snapshot {int(s)}")

    final = beta[-1] if len(V) else np.zeros(0)
    flat_gap = float(np.max(math.pi - final)) if final.size else 0.0
    checks["final_flatness_gap"] = flat_gap
    if flat_gap > tol.flat:
        out.append(f"flatness: final configuration has a joint {flat_gap:.3g} short of straight")

    if alpha < TWO_PI and n >= 1:
        bound = phase_bound(n, alpha)
        checks["phase_bound"] = bound
        checks["phase_count"] = len(traj.phases)
        if len(traj.phases) > bound:
            out.append(f"phase-bound: {len(traj.phases)} phases exceed {bound}")
    else:
        out.append(f"phase-bound: total length {alpha} is not below 2*pi")

    if math.pi < alpha < TWO_PI and len(V):
        gap = abs(spherical_distance(V[-1, 0], V[-1, -1]) - (TWO_PI - alpha))
        checks["endpoint_error"] = gap
        if gap > endpoint_tol:
            out.append(f"endpoints: final endpoint distance off by {gap:.3g}")

    for rec in traj.phases:
        if rec.delta < -slack:
            out.append(f"progress: phase {rec.index} lost {-rec.delta:.3g} of total angle")
        if rec.kind is PhaseKind.SUBCHAIN and rec.event is Event.HITS_MEDIAN and rec.belt is not None:
            w = rec.belt.width
            if rec.displacement < w / 2 - tol.event - 1e-12:
                out.append(f"progress: phase {rec.index} displaced a vertex only {rec.displacement:.6g} < w/2 = {w / 2:.6g}")
            if rec.delta < w / (2 * alpha) - progress_tol:
                out.append(f"progress: phase {rec.index} gained {rec.delta:.6g} < w/(2 alpha) = {w / (2 * alpha):.6g}")

    return VerificationReport(not out, out, checks)
