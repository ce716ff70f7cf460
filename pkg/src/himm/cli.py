"""Command-line interface: ``himm <command> --input ... --output ...``."""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Optional, Sequence

from .exits import fresh_table
from .generators import example_system, gen_recursive, gen_warehouse, random_himm
from .hierarchy import Himm, flatten, start_of, validate
from .io import DocumentError, exits_to_json, parse_script, read_document, save, write_json
from .machines import INF
from .system import LiveSystem


def _pair(text: str) -> tuple[int, int]:
    rows, _, cols = text.partition("x")
    return int(rows), int(cols or rows)


def _path(z: Himm, text: str) -> tuple[int, ...]:
    """``start``, dotted local ids like ``0.12.3``, or ``Machine/state-name``."""
    if text == "start":
        return start_of(z)
    if "/" in text:
        machine, _, state = text.rpartition("/")
        return z.find(machine, state)
    return tuple(int(part) for part in text.replace(",", ".").split("."))


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    if args.kind == "recursive":
        z = gen_recursive(args.depth, shared=args.shared)
    elif args.kind == "warehouse":
        z = gen_warehouse(args.houses, _pair(args.grid), _pair(args.rack), shared=args.shared).z
    elif args.kind == "random":
        z = random_himm(rng, max_depth=args.depth, share_prob=0.3 if args.shared else 0.0)
    else:
        z = example_system()
    write_json(save(z), args.output)
    return 0


def cmd_validate(args) -> int:
    try:
        z = read_document(args.input)
    except DocumentError as err:
        for problem in err.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    problems = validate(z)
    for v in problems:
        print(f"error: {v.kind}: {v.detail}", file=sys.stderr)
    if not problems:
        print(f"ok: {len(z.reachable_machines())} machines, depth {z.depth()}, {z.leaf_count()} leaf states")
    return 1 if problems else 0


def cmd_preprocess(args) -> int:
    z = read_document(args.input)
    table, searches = fresh_table(z)
    print(f"{searches} machine searches", file=sys.stderr)
    write_json(exits_to_json(z, table), args.output)
    return 0


def cmd_plan(args) -> int:
    z = read_document(args.input)
    live = LiveSystem(z)
    result = live.plan(_path(z, args.init), _path(z, args.goal), verify=args.verify)
    names = z.alphabet.names
    out = {
        "init": list(result.init),
        "goal": list(result.goal),
        "feasible": result.feasible,
        "cost": None if result.cost == INF else result.cost,
        "inputs": None if result.inputs is None else [names[a] for a in result.inputs],
    }
    write_json(out, args.output)
    return 0 if result.feasible else 2


def cmd_modify(args) -> int:
    z = read_document(args.input)
    live = LiveSystem(z)
    live.update()
    with open(args.script) as fh:
        script = json.load(fh)
    for i, entry in enumerate(script):
        (mod,) = parse_script(z, [entry])
        receipt = live.modify(mod)
        searches = live.update()
        print(f"step {i}: {receipt.op} on {z.names[receipt.target]}: {searches} machine searches", file=sys.stderr)
    write_json(save(z), args.output)
    return 0


def cmd_flatten(args) -> int:
    z = read_document(args.input)
    flat = flatten(z)
    out = Himm(z.alphabet)
    out.add_machine(flat.machine, "flat")
    doc = save(out)
    doc["leaves"] = [list(path) for path in flat.leaves]
    write_json(doc, args.output)
    return 0


def cmd_export_exits(args) -> int:
    return cmd_preprocess(args)


def cmd_bench(args) -> int:
    from .bench import study1, study2, write_csv
    from .plotting import plot_csv

    methods = tuple(args.methods.split(","))
    if args.study == 1:
        depths = [int(d) for d in args.depths.split(",")] if args.depths else range(3, 15)
        records = study1(depths, methods=methods, repeats=args.repeats, seed=args.seed)
    else:
        records = study2(args.houses, _pair(args.grid), _pair(args.rack), methods=methods, repeats=args.repeats, seed=args.seed)
    output = args.output or f"study{args.study}.csv"
    count = write_csv(records, output)
    png = plot_csv(output)
    print(f"{count} rows -> {output}, chart -> {png}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="himm", description="Hierarchical Mealy machine planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text, needs_input=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", "-i", required=needs_input, help="HimmDocument JSON")
        p.add_argument("--output", "-o", default=None, help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(handler=handler)
        return p

    p = command("gen", cmd_gen, "generate a system document", needs_input=False)
    p.add_argument("kind", choices=["recursive", "warehouse", "random", "example"])
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--shared", action="store_true", help="share identical machines")
    p.add_argument("--houses", type=int, default=10)
    p.add_argument("--grid", default="10x10")
    p.add_argument("--rack", default="3x3")

    command("validate", cmd_validate, "check a document")
    command("preprocess", cmd_preprocess, "compute the exit-cost table")
    command("export-exits", cmd_export_exits, "write the exit-cost table with witnesses")
    command("flatten", cmd_flatten, "write the flat single-machine equivalent")

    p = command("plan", cmd_plan, "optimal plan between two leaf states")
    p.add_argument("--init", required=True, help="'start', dotted path like 0.3.1, or Machine/state")
    p.add_argument("--goal", required=True)
    p.add_argument("--verify", action="store_true", help="replay the plan and check its cost")

    p = command("modify", cmd_modify, "apply a modification script and refresh exits")
    p.add_argument("--script", required=True, help="JSON array of modifications")

    p = command("bench", cmd_bench, "run a benchmark study to CSV plus a PNG chart", needs_input=False)
    p.add_argument("--study", type=int, choices=[1, 2], default=1)
    p.add_argument("--depths", default="", help="comma-separated depths for study 1")
    p.add_argument("--methods", default="hier,hier_shared,dijkstra,bidi,ch")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--houses", type=int, default=10)
    p.add_argument("--grid", default="10x10")
    p.add_argument("--rack", default="3x3")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except DocumentError as err:
        for problem in err.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except (ValueError, LookupError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
