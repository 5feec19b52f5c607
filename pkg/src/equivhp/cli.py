"""Command line front end: validate inputs, run check suites, compute HP ranks, verify Green-Julg.

Exit status: 0 when every asserted identity holds and no guard tripped,
1 when an identity fails or an input is invalid, 2 on usage errors (including
an uncertified pair without ``--level``), 3 when the dimension guard trips.
"""

import argparse
import json
import os
import sys

from .homalg import DEFAULT_GUARD, GuardExceeded, NotQuasifree
from .io import InputError, algebra_from, describe, groupoid_from
from .suites import SUITES, RunConfig, hom_ranks, run_suite

CONFIG_ENV = "EQUIVHP_CONFIG"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


def _defaults():
    """Defaults from the JSON file named by $EQUIVHP_CONFIG, if any."""
    base = {"max_degree": 6, "guard_dim": DEFAULT_GUARD, "seed": 0, "format": "json"}
    path = os.environ.get(CONFIG_ENV)
    if path:
        with open(path) as fh:
            base.update(json.load(fh))
    return base


def build_parser(defaults=None):
    d = defaults or _defaults()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default=d["format"])
    common.add_argument("--guard-dim", type=int, default=d["guard_dim"], metavar="N", help="largest fiber dimension allowed")
    common.add_argument("--seed", type=int, default=d["seed"])
    common.add_argument("--max-degree", type=int, default=d["max_degree"], help="form degree cap (relations checked up to cap - 2)")
    common.add_argument("--level", type=int, default=None, help="force the Hodge tower at this level")

    parser = argparse.ArgumentParser(prog="equivhp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="validate groupoid, module or algebra files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--groupoid", help="groupoid for module and algebra files")

    p = sub.add_parser("check", parents=[common], help="run a check suite")
    p.add_argument("--groupoid", required=True, help="builtin:z2|pair2|z2z3|flip or a file")
    p.add_argument("--algebra", default="trivial")
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")

    p = sub.add_parser("hp", parents=[common], help="ranks of equivariant HP")
    p.add_argument("--groupoid", required=True)
    p.add_argument("--source", default="trivial")
    p.add_argument("--target", default="trivial")

    p = sub.add_parser("greenjulg", parents=[common], help="both sides of Green-Julg")
    p.add_argument("--groupoid", required=True)
    p.add_argument("--algebra", default="trivial")
    return parser


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def _text_lines(value, prefix=""):
    if isinstance(value, dict):
        for k in sorted(value):
            yield from _text_lines(value[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            yield from _text_lines(v, f"{prefix}[{i}]")
    else:
        yield f"{prefix}: {json.dumps(value)}"


def render(report, fmt):
    report = _plain(report)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    return "\n".join(_text_lines(report))


def _config(args):
    return RunConfig(max_degree=args.max_degree, level=args.level, guard=args.guard_dim, seed=args.seed)


def cmd_validate(args):
    G = groupoid_from(args.groupoid) if args.groupoid else None
    lines = []
    for path in args.paths:
        try:
            lines.append({"path": path, "valid": True, "message": describe(path, G)})
        except InputError as exc:
            lines.append({"path": path, "valid": False, "message": str(exc)})
            break
    return {"command": "validate", "files": lines, "passed": all(l["valid"] for l in lines)}


def cmd_check(args):
    G = groupoid_from(args.groupoid)
    A = algebra_from(args.algebra, G)
    report = run_suite(args.suite, G, A, _config(args))
    return {"command": "check", "suite": args.suite, "groupoid": args.groupoid, "algebra": args.algebra, "report": report, "passed": report["passed"]}


def cmd_hp(args):
    G = groupoid_from(args.groupoid)
    A, B = algebra_from(args.source, G), algebra_from(args.target, G)
    report = hom_ranks(A, B, _config(args))
    return {"command": "hp", "groupoid": args.groupoid, "source": args.source, "target": args.target, **report, "passed": True}


def cmd_greenjulg(args):
    G = groupoid_from(args.groupoid)
    A = algebra_from(args.algebra, G)
    report = run_suite("greenjulg", G, A, _config(args))
    return {"command": "greenjulg", "groupoid": args.groupoid, "algebra": args.algebra, "report": report, "passed": report["passed"]}


COMMANDS = {"validate": cmd_validate, "check": cmd_check, "hp": cmd_hp, "greenjulg": cmd_greenjulg}


def run(argv=None):
    """Parse, execute and return (exit code, report dict, format)."""
    args = build_parser().parse_args(argv)
    fmt = args.format
    try:
        _config(args)
    except ValueError as exc:
        return EXIT_USAGE, {"command": args.command, "status": "usage", "message": str(exc), "passed": False}, fmt
    try:
        report = COMMANDS[args.command](args)
    except GuardExceeded as exc:
        return EXIT_GUARD, {"command": args.command, "status": "guard_exceeded", "message": str(exc), "passed": False}, fmt
    except NotQuasifree as exc:
        return EXIT_USAGE, {"command": args.command, "status": "usage", "message": f"{exc}; pass --level N to use the Hodge tower", "passed": False}, fmt
    except (InputError, ValueError) as exc:
        return EXIT_FAIL, {"command": args.command, "status": "invalid", "message": str(exc), "passed": False}, fmt
    report.setdefault("status", "ok" if report["passed"] else "failed")
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report, fmt


def main(argv=None):
    code, report, fmt = run(argv)
    print(render(report, fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
