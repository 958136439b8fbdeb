"""Command-line entry point of the subshift tiling compiler."""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from utils.artifacts import kind_of, load_artifact, load_json, save_bytes, save_json
from utils.compiler import (
    CompiledSystem,
    check_extendability,
    compile_system,
    normalize_alignment,
    verify_completeness,
    verify_soundness,
)
from utils.config import configure_logging, get_settings
from utils.core import Patch, WangTileSet
from utils.errors import ArtifactError, ResourceLimitError, TilingError
from utils.flatten import FlattenBounds
from utils.hierarchy import Assembly, build_assembly
from utils.renderer import FORMATS, TilingRenderer
from utils.report_store import ReportStore
from utils.schedule import ZoomSchedule, validate_schedule
from utils.solver import LIMIT, SAT, BoundaryConstraint, export_cnf, find_periodic, tile_region
from utils.subshift import SubshiftSpec, builtin_names, legal_words, releases
from utils.tmtiles import FIXTURE_MACHINES, TMSpec, run_tm, tm_to_wang

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


class UsageError(Exception):
    """Bad or missing command-line input"""


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="subshift JSON file or builtin name")
    common.add_argument("--cs", help="compiled system JSON file")
    common.add_argument("--C", type=int, help="constant C of the doubling schedule")
    common.add_argument("--schedule", help="custom zoom factors, e.g. 2,4,16, or a schedule JSON file")
    common.add_argument("--groups", help="custom group lengths, e.g. 0,1,5")
    common.add_argument("--K", type=int, default=2, help="top level (default 2)")
    common.add_argument("--budget", type=int, default=1, help="enumeration budget t")
    common.add_argument("--width", type=int)
    common.add_argument("--height", type=int)
    common.add_argument("--limit", type=int, help="solver node budget")
    common.add_argument("--out", help="output file")
    common.add_argument("--json", action="store_true", help="print JSON lines")
    common.add_argument("--threads", type=int, help="parallel verification workers")
    common.add_argument("--force", action="store_true", help="compile despite structural schedule failures")
    common.add_argument("--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="tiling-compiler", description="Compile 1D subshifts into 2D local rules")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", parents=[common], help="build a compiled system")
    p.add_argument("--strict", action="store_true", help="fail on capacity margin misses")
    p.add_argument("--flatten-bound", type=int, help="emit a flat tile set under this record bound")

    p = sub.add_parser("tile", parents=[common], help="solve a Wang tiling instance")
    p.add_argument("--tiles", help="tile set JSON (defaults to the flat tiles of --cs)")
    p.add_argument("--boundary", help="boundary constraint JSON")
    p.add_argument("--count", type=int, default=1, help="tilings to collect, 0 for all")
    p.add_argument("--periodic", type=int, metavar="PMAX", help="search tori up to PMAX x PMAX instead")

    p = sub.add_parser("verify", parents=[common], help="run a verifier")
    p.add_argument("--mode", choices=("soundness", "completeness", "extendable"), required=True)
    p.add_argument("--word", action="append", default=[], help="word for --mode extendable (repeatable)")
    p.add_argument("--alignment", type=int, action="append", help="top-level offset to sweep (repeatable)")
    p.add_argument("--pdf", help="also write the report as PDF")
    p.add_argument("--data-dir", help="where run history is kept")

    p = sub.add_parser("oracle", parents=[common], help="list legal words")
    p.add_argument("--n", type=int, required=True, help="word length")

    sub.add_parser("enum", parents=[common], help="list released forbidden words")

    p = sub.add_parser("render", parents=[common], help="draw a patch, tiling or assembly")
    p.add_argument("--input", help="patch or assembly JSON")
    p.add_argument("--word", help="ground word to build an assembly from")
    p.add_argument("--alignment", type=int, default=0, help="top-level offset for --word")
    p.add_argument("--format", choices=FORMATS, default="ascii")

    p = sub.add_parser("export-cnf", parents=[common], help="write DIMACS CNF for a tiling instance")
    p.add_argument("--tiles", required=True)
    p.add_argument("--boundary")

    sub.add_parser("validate-schedule", parents=[common], help="check the schedule margins up to --K")

    p = sub.add_parser("tm", parents=[common], help="run a machine and its tiling side by side")
    p.add_argument("--machine", help="machine JSON file")
    p.add_argument("--fixture", choices=sorted(FIXTURE_MACHINES), help="shipped example machine")
    p.add_argument("--input", default="", help="tape input")

    p = sub.add_parser("history", parents=[common], help="list or clear past verification runs")
    p.add_argument("--clear", action="store_true")
    p.add_argument("--delete", type=int, metavar="ID")
    p.add_argument("--show", type=int, metavar="ID", help="print one stored run")
    p.add_argument("--data-dir")
    return parser


# --- argument helpers ---

def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"Expected comma-separated integers, got {text!r}") from e


def _schedule(args) -> ZoomSchedule:
    if args.schedule:
        if args.schedule.endswith(".json"):
            return load_artifact(args.schedule, ZoomSchedule.from_dict)
        groups = _int_list(args.groups) if args.groups else None
        return ZoomSchedule.custom(_int_list(args.schedule), groups)
    return ZoomSchedule.doubling(args.C if args.C is not None else 1)


def _spec(args) -> SubshiftSpec:
    if not args.spec:
        raise UsageError("--spec is required")
    if args.spec in builtin_names() and not os.path.exists(args.spec):
        return SubshiftSpec.builtin(args.spec)
    return load_artifact(args.spec, SubshiftSpec.from_dict)


def _compiled(args) -> CompiledSystem:
    if args.cs:
        return load_artifact(args.cs, CompiledSystem.from_dict)
    return compile_system(_spec(args), _schedule(args), args.K, force=args.force)


def _require(args, *names: str) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


def _emit(args, payload, text: str) -> None:
    print(json.dumps(payload) if args.json else text)


# --- commands ---

def cmd_compile(args) -> int:
    bounds = None
    if args.flatten_bound is not None:
        bounds = FlattenBounds(args.flatten_bound, args.width)
    cs = compile_system(_spec(args), _schedule(args), args.K, flatten=bounds, force=args.force, strict=args.strict)
    data = cs.to_dict()
    if args.out:
        save_json(args.out, data)
    _emit(args, data, f"compiled {cs.spec.name} with {cs.schedule.describe()}, K={cs.K}"
          + (f", flat tile set of {len(cs.flat.tiles)} tiles" if cs.flat else ""))
    return EXIT_OK


def _tiles_and_region(args):
    if args.tiles:
        _require(args, "width", "height")
        return load_artifact(args.tiles, WangTileSet.from_dict), args.width, args.height
    if args.cs:
        cs = load_artifact(args.cs, CompiledSystem.from_dict)
        if cs.flat is None:
            raise UsageError("Compiled system has no flat tile set; compile with --flatten-bound")
        return cs.flat.tiles, cs.flat.width, cs.flat.height
    raise UsageError("tile needs --tiles or --cs")


def cmd_tile(args) -> int:
    if args.periodic is not None:
        if not args.tiles:
            raise UsageError("--periodic needs --tiles")
        found = find_periodic(load_artifact(args.tiles, WangTileSet.from_dict), args.periodic, args.limit)
        if found and args.out:
            save_json(args.out, found.to_dict())
        _emit(args, found.to_dict() if found else {"period": None},
              f"period {found.period}" if found else "no periodic tiling within bounds")
        return EXIT_OK

    tiles, w, h = _tiles_and_region(args)
    bc = load_artifact(args.boundary, BoundaryConstraint.from_dict) if args.boundary else None
    result = tile_region(tiles, w, h, bc, limit=args.limit, count=None if args.count == 0 else args.count)
    if result.witness is not None and args.out:
        save_json(args.out, result.witness.to_dict())
    text = f"{result.status} ({len(result.tilings)} tilings, {result.stats.nodes} nodes)"
    if result.witness is not None:
        text += "\n" + "\n".join(" ".join(str(t) for t in row) for row in result.witness.rows())
    _emit(args, result.to_dict(), text)
    return EXIT_LIMIT if result.status == LIMIT else EXIT_OK


def cmd_verify(args) -> int:
    cs = _compiled(args)
    if args.mode == "soundness":
        _require(args, "width", "height")
        report = verify_soundness(cs, args.width, args.height, args.budget, args.alignment, args.threads)
    elif args.mode == "completeness":
        _require(args, "width")
        report = verify_completeness(cs, args.width, args.budget, args.alignment, args.threads)
    else:
        _require(args, "height")
        if not args.word:
            raise UsageError("--mode extendable needs at least one --word")
        report = check_extendability(cs, args.word, args.height)

    data = report.to_dict()
    if args.out:
        save_json(args.out, data)
    if args.pdf:
        TilingRenderer().render_report_pdf(data, args.pdf)
    ReportStore(args.data_dir).add_entry(data, f"verify --mode {args.mode}", args.out)

    if args.json:
        for word in report.accepted:
            print(json.dumps({"accepted": word}))
        for failure in report.failures:
            print(json.dumps(failure.to_dict()))
        print(json.dumps({"mode": report.mode, "ok": report.ok, "instances": report.instances}))
    else:
        print(f"{report.mode}: {'pass' if report.ok else 'FAIL'} ({report.instances} instances)")
        print(f"accepted {len(report.accepted)}: {' '.join(w or '(empty)' for w in report.accepted)}")
        for failure in report.failures:
            print(f"  {failure.word} {list(failure.alignment)}: {failure.reason}")
    return EXIT_OK if report.ok else EXIT_FAILURES


def cmd_oracle(args) -> int:
    words = legal_words(_spec(args), args.n, args.budget)
    if args.json:
        for word in words:
            print(json.dumps({"word": word}))
    else:
        for word in words:
            print(word if word else "(empty)")
    return EXIT_OK


def cmd_enum(args) -> int:
    for step, word in releases(_spec(args), args.budget):
        _emit(args, {"step": step, "word": word}, f"{step}\t{word}")
    return EXIT_OK


def cmd_render(args) -> int:
    if args.input:
        data = load_json(args.input)
        kind = kind_of(data)
        if kind == "assembly":
            obj = Assembly.from_dict(data)
        elif kind == "patch":
            obj = Patch.from_dict(data)
        else:
            raise ArtifactError(f"{args.input} holds neither a patch nor an assembly")
    elif args.word is not None:
        schedule = _schedule(args)
        obj = build_assembly(args.word, args.K, schedule, normalize_alignment(schedule, args.K, args.alignment))
    else:
        raise UsageError("render needs --input or --word")

    payload = TilingRenderer().render(obj, args.format)
    if args.out:
        save_bytes(args.out, payload)
    elif args.format == "ascii":
        sys.stdout.write(payload.decode())
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def cmd_export_cnf(args) -> int:
    _require(args, "width", "height")
    tiles = load_artifact(args.tiles, WangTileSet.from_dict)
    bc = load_artifact(args.boundary, BoundaryConstraint.from_dict) if args.boundary else None
    text = export_cnf(tiles, args.width, args.height, bc)
    if args.out:
        save_bytes(args.out, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate_schedule(args) -> int:
    report = validate_schedule(_schedule(args), args.K)
    if args.json:
        for entry in report.entries:
            print(json.dumps(entry.to_dict()))
    else:
        print(f"{report.schedule.describe()} up to k={report.kmax}: threshold level {report.threshold}")
        for entry in report.entries:
            sides = "" if entry.lhs is None else f"  {entry.lhs} <= {entry.rhs}"
            print(f"  k={entry.level} ({entry.check}, {entry.kind}): {entry.status}{sides}")
    if args.out:
        save_json(args.out, report.to_dict())
    return EXIT_OK if report.structural_ok else EXIT_FAILURES


def cmd_tm(args) -> int:
    _require(args, "width", "height")
    if args.machine:
        tm = load_artifact(args.machine, TMSpec.from_dict)
    elif args.fixture:
        tm = FIXTURE_MACHINES[args.fixture]()
    else:
        raise UsageError("tm needs --machine or --fixture")

    run = run_tm(tm, args.input, args.height - 1, args.width)
    encoding = tm_to_wang(tm, args.width, args.height)
    result = tile_region(encoding.tiles, args.width, args.height, encoding.boundary(args.input), limit=args.limit)
    if result.status == LIMIT:
        return EXIT_LIMIT
    agree = run.accepted == (result.status == SAT)
    _emit(
        args,
        {"run": run.to_dict(), "tiling": result.status, "agree": agree},
        f"run: {run.verdict} after {run.steps} steps; tiling: {result.status}; "
        + ("agree" if agree else "DISAGREE"),
    )
    return EXIT_OK if agree else EXIT_FAILURES


def cmd_history(args) -> int:
    store = ReportStore(args.data_dir)
    if args.clear:
        store.clear_history()
        print("history cleared")
        return EXIT_OK
    if args.delete is not None:
        return EXIT_OK if store.delete_entry(args.delete) else EXIT_FAILURES
    if args.show is not None:
        entry = store.get_entry(args.show)
        if not entry:
            print(f"no run with id {args.show}", file=sys.stderr)
            return EXIT_FAILURES
        print(json.dumps(entry, indent=None if args.json else 2))
        return EXIT_OK
    for entry in store.get_history():
        _emit(args, entry, f"{entry['id']:>4}  {entry['timestamp']}  {entry['command']}  "
              f"{'pass' if entry['ok'] else 'FAIL'}  {entry['instances']} instances")
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "tile": cmd_tile,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "enum": cmd_enum,
    "render": cmd_render,
    "export-cnf": cmd_export_cnf,
    "validate-schedule": cmd_validate_schedule,
    "tm": cmd_tm,
    "history": cmd_history,
}


def run_command(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    configure_logging("DEBUG" if args.verbose else get_settings().log_level)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as e:
        print(f"limit: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except TilingError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
