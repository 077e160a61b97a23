"""Command line entry point.

Exit status: 0 on success, 1 when the input is rejected, 2 when an internal
guarantee fails (including a trajectory that does not verify), 64 on a usage
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

from . import __version__
from .chain import classify, random_chain
from .errors import DomainError, InvariantError, SamplingError
from .geometry import hemisphere_margin
from .io import ChainDocument, TrajectoryDocument, parse_chain, parse_trajectory, write_snapshots_csv
from .measure import estimate_class_measures
from .planner import flatten, verify_trajectory
from .separation import find_separation
from .tolerances import Tolerances

log = logging.getLogger("svfold")

EXIT_OK, EXIT_DOMAIN, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=1)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_validate(args, tol):
    doc = parse_chain(_read(args.input))
    chain = doc.chain()
    print(f"ok: {doc.kind} document, n={chain.n}, total={chain.total!r} ({doc.intrinsic.length_class})")
    return EXIT_OK


def cmd_classify(args, tol):
    chain = parse_chain(_read(args.input)).chain()
    margin, _ = hemisphere_margin(chain.vertices)
    state = classify(chain, tol.flat, tol.hemi)
    print(_table([{"class": state.value, "hemisphere_margin": margin, "n": chain.n, "total": chain.total}], args.format))
    return EXIT_OK


def cmd_separate(args, tol):
    chain = parse_chain(_read(args.input)).chain()
    sep = find_separation(chain, tol.belt)
    row = {
        "edge_index": sep.edge_index,
        "belt_pole": [float(x) for x in sep.belt.median.pole],
        "belt_width": sep.belt.width,
        "width_bound": (2 * math.pi - chain.total) / (chain.n + 2),
        "crossing_point": None if sep.crossing_point is None else [float(x) for x in sep.crossing_point],
        "class_measures": [float(x) for x in sep.class_measures],
    }
    if args.format == "csv":
        row = {k: json.dumps(v) if isinstance(v, list) else v for k, v in row.items()}
    print(_table([row], args.format))
    return EXIT_OK


def cmd_measure(args, tol):
    chain = parse_chain(_read(args.input)).chain()
    rep = estimate_class_measures(chain, args.samples, seed=args.seed or 0, workers=args.jobs)
    if args.format == "csv":
        rows = [
            {"class": k, "measure": float(m), "stderr": float(s)}
            for k, (m, s) in enumerate(zip(rep.mu_estimates, rep.standard_errors))
        ]
        rows.append({"class": "non-nice", "measure": rep.non_nice[0], "stderr": rep.non_nice[1]})
        print(_table(rows, "csv"))
        return EXIT_OK
    lhs, lhs_se = rep.lemma_lhs
    total, total_se = rep.total_measure
    out = {
        "samples": rep.sample_count,
        "seed": rep.seed,
        "class_measures": [float(x) for x in rep.mu_estimates],
        "standard_errors": [float(x) for x in rep.standard_errors],
        "non_nice": list(rep.non_nice),
        "crossing_integral": rep.crossing_integral,
        "total_measure": [total, total_se],
        "nice_sum_with_double_empty": [lhs, lhs_se],
        "lower_bound": 2 * (2 * math.pi - chain.total),
    }
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_flatten(args, tol):
    doc = parse_chain(_read(args.input))
    chain = doc.chain()
    traj = flatten(chain, tol)
    report = verify_trajectory(traj, tol=tol)
    log.info("flattened in %d phases, %d snapshots", traj.phase_count, len(traj.times))
    tdoc = TrajectoryDocument.build(chain, traj, report, args.snapshot_stride, doc.seed)
    if args.format == "csv":
        buf = io.StringIO()
        write_snapshots_csv(tdoc.trajectory, buf)
        _write(args.out, buf.getvalue())
    else:
        _write(args.out, tdoc.to_json())
    if not report:
        for v in report.violations:
            log.error("%s", v)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_verify(args, tol):
    tdoc = parse_trajectory(_read(args.input))
    report = verify_trajectory(tdoc.trajectory, tol=tol)
    print(json.dumps({"ok": report.ok, "violations": report.violations, "checks": report.checks}, indent=1))
    return EXIT_OK if report else EXIT_INVARIANT


def cmd_random(args, tol):
    seed = args.seed if args.seed is not None else 0
    chain = random_chain(args.n, args.total, seed)
    _write(args.out, ChainDocument.from_chain(chain, seed).to_json())
    return EXIT_OK


def _dump_instance(inst) -> None:
    if inst is None:
        return
    pts = getattr(inst, "vertices", None)
    if pts is None:
        pts = getattr(inst, "points", None)
    if pts is None:
        print(f"instance: {inst!r}", file=sys.stderr)
        return
    print(f"instance: {inst!r}", file=sys.stderr)
    print(json.dumps({"points": [[float(x) for x in v] for v in pts]}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="svfold", description="Flatten single-vertex origami via spherical chains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tolerance-profile", choices=["default", "strict"], default="default")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, reads=True):
        sp = sub.add_parser(name, help=help_)
        if reads:
            sp.add_argument("--in", dest="input", default="-", help="input document (default stdin)")
        # also accept the global flags after the subcommand
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
        sp.add_argument("--tolerance-profile", choices=["default", "strict"], default=argparse.SUPPRESS)
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "parse and check a chain document")
    add("classify", cmd_classify, "Flat, Hemispherical or SphereSpanning")
    add("separate", cmd_separate, "largest nice class and its belt")
    m = add("measure", cmd_measure, "Monte Carlo measures of crossing classes")
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--jobs", type=int, default=1)
    f = add("flatten", cmd_flatten, "straighten a chain and write the trajectory")
    f.add_argument("--out", default="-")
    f.add_argument("--snapshot-stride", type=int, default=1)
    add("verify", cmd_verify, "re-verify a trajectory document")
    r = add("random", cmd_random, "emit a random valid chain", reads=False)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--total", type=float, required=True)
    r.add_argument("--out", default="-")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    tol = Tolerances.profile(args.tolerance_profile)
    if getattr(args, "snapshot_stride", 1) < 1:
        print("svfold: error: --snapshot-stride must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, tol)
    except (DomainError, SamplingError) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        _dump_instance(exc.instance)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
