"""Chain and trajectory documents.

Both are JSON. Floats are written with Python's shortest round-trip repr, so
reading a document back reproduces every coordinate bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .chain import TWO_PI, LONG_CHAIN_REASON, IntrinsicChain, SphericalChain, origami_to_chain
from .errors import DocumentError, DomainError
from .expander import Event
from .geometry import GreatCircle
from .planner import PhaseKind, PhaseRecord, Trajectory, VerificationReport
from .separation import Belt

SCHEMA_VERSION = 1

_number = {"type": "number"}
_vec3 = {"type": "array", "items": _number, "minItems": 3, "maxItems": 3}

CHAIN_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["origami", "chain"]},
        "seed": {"type": ["integer", "null"]},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "origami"}}},
            "then": {
                "required": ["sector_angles", "vertex_on_boundary"],
                "properties": {
                    "sector_angles": {"type": "array", "items": _number, "minItems": 1},
                    "vertex_on_boundary": {"type": "boolean"},
                    "turning_angles": {"type": "array", "items": _number},
                    "unit": {"enum": ["rad", "deg"]},
                },
            },
        },
        {
            "if": {"properties": {"kind": {"const": "chain"}}},
            "then": {
                "required": ["vertices", "arc_lengths"],
                "properties": {
                    "vertices": {"type": "array", "items": _vec3, "minItems": 2},
                    "arc_lengths": {"type": "array", "items": _number, "minItems": 1},
                },
            },
        },
    ],
}

TRAJECTORY_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "instance", "snapshots", "phases"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "instance": {"type": "object"},
        "snapshot_stride": {"type": "integer", "minimum": 1},
        "snapshots": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["t", "coords"],
                "properties": {"t": _number, "step": {"type": "integer"}, "coords": {"type": "array", "items": _number}},
            },
        },
        "phases": {"type": "array", "items": {"type": "object"}},
        "verification": {"type": ["object", "null"]},
    },
}


def _validate(obj, schema):
    errors = list(jsonschema.Draft202012Validator(schema).iter_errors(obj))
    if errors:
        # the deepest error names the most specific field
        exc = max(errors, key=lambda e: len(e.absolute_path))
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise DocumentError(path, exc.message)


def _load(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None


def _same(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return np.array_equal(np.asarray(a), np.asarray(b))


@dataclass(eq=False)
class ChainDocument:
    """A chain given either as an origami or by explicit coordinates.

    Angles are held in radians. Origami documents without turning angles
    describe the unfolded paper, where every joint is straight.
    """

    kind: str
    arc_lengths: np.ndarray
    vertices: np.ndarray | None = None
    vertex_on_boundary: bool | None = None
    turning_angles: np.ndarray | None = None
    seed: int | None = None
    schema_version: int = SCHEMA_VERSION

    @property
    def intrinsic(self) -> IntrinsicChain:
        return IntrinsicChain(tuple(self.arc_lengths))

    def chain(self) -> SphericalChain:
        if self.vertices is not None:
            return SphericalChain(self.vertices, self.arc_lengths)
        turning = self.turning_angles if self.turning_angles is not None else np.zeros(len(self.arc_lengths) - 1)
        return SphericalChain.from_turning_angles(self.arc_lengths, turning)

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "kind": self.kind}
        if self.kind == "origami":
            d["sector_angles"] = [float(a) for a in self.arc_lengths]
            d["vertex_on_boundary"] = bool(self.vertex_on_boundary)
            d["unit"] = "rad"
            if self.turning_angles is not None:
                d["turning_angles"] = [float(a) for a in self.turning_angles]
        else:
            d["vertices"] = [[float(x) for x in v] for v in self.vertices]
            d["arc_lengths"] = [float(a) for a in self.arc_lengths]
        if self.seed is not None:
            d["seed"] = int(self.seed)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other):
        if not isinstance(other, ChainDocument):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.seed == other.seed
            and self.schema_version == other.schema_version
            and self.vertex_on_boundary == other.vertex_on_boundary
            and _same(self.arc_lengths, other.arc_lengths)
            and _same(self.vertices, other.vertices)
            and _same(self.turning_angles, other.turning_angles)
        )

    @classmethod
    def from_chain(cls, chain: SphericalChain, seed: int | None = None) -> "ChainDocument":
        return cls("chain", np.array(chain.arc_lengths), np.array(chain.vertices), seed=seed)


def chain_from_dict(d: dict) -> ChainDocument:
    _validate(d, CHAIN_SCHEMA)
    seed = d.get("seed")
    if d["kind"] == "origami":
        scale = math.pi / 180.0 if d.get("unit", "rad") == "deg" else 1.0
        sectors = np.array(d["sector_angles"], dtype=float) * scale
        intrinsic = origami_to_chain(sectors, d["vertex_on_boundary"])
        turning = None
        if "turning_angles" in d:
            turning = np.array(d["turning_angles"], dtype=float) * scale
            if len(turning) != len(sectors) - 1:
                raise DocumentError(
                    "$.turning_angles", f"expected {len(sectors) - 1} turning angles for {len(sectors)} sectors"
                )
        doc = ChainDocument("origami", np.array(intrinsic.arc_lengths), None, True, turning, seed)
    else:
        V = np.array(d["vertices"], dtype=float)
        L = np.array(d["arc_lengths"], dtype=float)
        if len(L) != len(V) - 1:
            raise DocumentError("$.arc_lengths", f"{len(L)} arc lengths given for {len(V) - 1} edges")
        if float(L.sum()) >= TWO_PI:
            raise DomainError(f"total length {float(L.sum())} rejected: {LONG_CHAIN_REASON}")
        doc = ChainDocument("chain", L, V, seed=seed)
    doc.intrinsic  # total length check
    doc.chain()  # per-edge checks, naming the edge
    return doc


def parse_chain(text: str) -> ChainDocument:
    """Parse and validate a chain document.

    Schema problems raise ``DocumentError`` carrying a JSON path (or the
    line and column of a syntax error); geometrically invalid input raises
    ``DomainError`` naming the offending edge.
    """
    return chain_from_dict(_load(text))


def _belt_dict(b: Belt | None):
    if b is None:
        return None
    return {"pole": [float(x) for x in b.median.pole], "width": float(b.width), "crossing_edge": b.crossing_edge}


def _belt_from(d) -> Belt | None:
    if d is None:
        return None
    return Belt(GreatCircle(np.array(d["pole"], dtype=float)), float(d["width"]), d.get("crossing_edge"))


def phase_to_dict(r: PhaseRecord) -> dict:
    return {
        "index": r.index,
        "kind": r.kind.value,
        "side": r.side,
        "event": r.event.value,
        "belt": _belt_dict(r.belt),
        "edge_index": r.edge_index,
        "delta": float(r.delta),
        "displaced_vertex": r.displaced_vertex,
        "displacement": float(r.displacement),
        "deficits": None if r.deficits is None else [float(x) for x in r.deficits],
        "steps": r.steps,
        "t_start": float(r.t_start),
        "t_end": float(r.t_end),
        "first_snapshot": r.first_snapshot,
        "last_snapshot": r.last_snapshot,
    }


def phase_from_dict(d: dict) -> PhaseRecord:
    try:
        return PhaseRecord(
            index=int(d["index"]),
            kind=PhaseKind(d["kind"]),
            side=d["side"],
            event=Event(d["event"]),
            belt=_belt_from(d.get("belt")),
            edge_index=d.get("edge_index"),
            delta=float(d["delta"]),
            displaced_vertex=d.get("displaced_vertex"),
            displacement=float(d["displacement"]),
            deficits=None if d.get("deficits") is None else tuple(d["deficits"]),
            steps=int(d["steps"]),
            t_start=float(d["t_start"]),
            t_end=float(d["t_end"]),
            first_snapshot=int(d["first_snapshot"]),
            last_snapshot=int(d["last_snapshot"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DocumentError(f"$.phases[{d.get('index', '?')}]", f"bad phase record ({exc})") from None


@dataclass(eq=False)
class TrajectoryDocument:
    instance: ChainDocument
    trajectory: Trajectory
    steps: list = field(default_factory=list)  # full-resolution index of each stored snapshot
    snapshot_stride: int = 1
    verification: dict | None = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def build(
        cls, chain: SphericalChain, traj: Trajectory, report: VerificationReport | None = None, stride: int = 1, seed=None
    ) -> "TrajectoryDocument":
        """Wrap a trajectory, keeping every ``stride``-th snapshot plus phase ends."""
        keep = set(range(0, len(traj.times), stride)) | {len(traj.times) - 1}
        keep |= {p.first_snapshot for p in traj.phases} | {p.last_snapshot for p in traj.phases}
        idx = sorted(keep)
        sub = Trajectory(traj.arc_lengths, traj.times[idx], traj.configs[idx], list(traj.phases))
        ver = None
        if report is not None:
            ver = {"ok": report.ok, "violations": list(report.violations), "checks": report.checks}
        return cls(ChainDocument.from_chain(chain, seed), sub, idx, stride, ver)

    def to_dict(self) -> dict:
        T = self.trajectory
        return {
            "schema_version": self.schema_version,
            "instance": self.instance.to_dict(),
            "snapshot_stride": self.snapshot_stride,
            "snapshots": [
                {"t": float(t), "step": int(s), "coords": [float(x) for x in v.ravel()]}
                for t, s, v in zip(T.times, self.steps, T.configs)
            ],
            "phases": [phase_to_dict(p) for p in T.phases],
            "verification": self.verification,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __eq__(self, other):
        if not isinstance(other, TrajectoryDocument):
            return NotImplemented
        a, b = self.trajectory, other.trajectory
        return (
            self.instance == other.instance
            and self.steps == other.steps
            and self.snapshot_stride == other.snapshot_stride
            and self.verification == other.verification
            and _same(a.arc_lengths, b.arc_lengths)
            and _same(a.times, b.times)
            and _same(a.configs, b.configs)
            and [phase_to_dict(p) for p in a.phases] == [phase_to_dict(p) for p in b.phases]
        )


def trajectory_from_dict(d: dict) -> TrajectoryDocument:
    _validate(d, TRAJECTORY_SCHEMA)
    inst = chain_from_dict(d["instance"])
    L = np.array(inst.arc_lengths)
    width = 3 * (len(L) + 1)
    snaps = d["snapshots"]
    for i, s in enumerate(snaps):
        if len(s["coords"]) != width:
            raise DocumentError(f"$.snapshots[{i}].coords", f"expected {width} numbers, got {len(s['coords'])}")
    times = np.array([s["t"] for s in snaps], dtype=float)
    configs = np.array([s["coords"] for s in snaps], dtype=float).reshape(len(snaps), len(L) + 1, 3)
    steps = [int(s.get("step", i)) for i, s in enumerate(snaps)]
    phases = [phase_from_dict(p) for p in d["phases"]]
    traj = Trajectory(L, times, configs, phases)
    return TrajectoryDocument(inst, traj, steps, int(d.get("snapshot_stride", 1)), d.get("verification"))


def parse_trajectory(text: str) -> TrajectoryDocument:
    return trajectory_from_dict(_load(text))


def write_snapshots_csv(traj: Trajectory, fh) -> None:
    """One (time, vertex_index, x, y, z) row per vertex per snapshot."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "vertex_index", "x", "y", "z"])
    for t, V in zip(traj.times, traj.configs):
        for i, (x, y, z) in enumerate(V):
            w.writerow([repr(float(t)), i, repr(float(x)), repr(float(y)), repr(float(z))])
