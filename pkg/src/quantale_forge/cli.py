"""Command line entry point: run check suites, construct objects, list a workspace.

Exit codes: 0 all checks pass, 1 at least one fail, 2 an incident (a theorem
violation), 3 a usage or parse error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import QFError
from .qfformat import HEADER, Workspace, emit, parse_text, same
from .runner import EXIT_INCIDENT, EXIT_OK, EXIT_USAGE, SUITES, Options, file_hashes, run

FIXTURES = Path(__file__).parent / "fixtures"
CORE = FIXTURES / "core.qf"
MUTATIONS = FIXTURES / "mutations.qf"
REPORT_DIR_VAR = "QF_REPORT_DIR"

# construct WHAT -> (kind, recipe template, default name prefix)
CONSTRUCT = {
    "oquantale": ("quantale", "oquantale {0} {conv}", "O_{0}"),
    "cover": ("cover", "{cover} {0}", "cover_{0}"),
    "lift": ("action", "lift {0} {1}", "{0}_lift"),
    "descend": ("action", "descend {0} {1}", "{0}_desc"),
    "tensor": ("bilocale", "compose {0} {1}", "{0}_{1}"),
    "orbit": ("space", "orbit {0}", "{0}_orbits"),
}
ARITY = {"oquantale": 1, "cover": 1, "lift": 2, "descend": 2, "tensor": 2, "orbit": 1}
SUITE_OF = {"quantale": "quantale", "cover": "cover", "action": "actions", "bilocale": "bilocale",
            "space": "suplat"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def load(files) -> Workspace:
    """Parse files in order into one workspace; later files may refer to earlier names."""
    ws = Workspace()
    for f in files:
        p = Path(f)
        if not p.is_file():
            raise QFError(f"no such file: {f}")
        ws = parse_text(p.read_text(encoding="utf-8"), str(p), ws)
    return ws


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quantale-forge", description="Finite-model checks for groupoid quantales and their relatives.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run check suites over structure files")
    r.add_argument("files", nargs="*", help=f"structure files (default: the packaged {CORE.name})")
    r.add_argument("--suite", default="all", help="one of " + ", ".join(SUITES + ("all",)))
    r.add_argument("--only", help="only objects whose name matches this glob")
    r.add_argument("--emit", metavar="PATH", help="write the machine report here")
    r.add_argument("--max-size", type=int, default=Options.max_size, help="capacity guard on quantale carriers")
    r.add_argument("--convention", choices=("d", "r"), default="r", help="restriction side for O(G)")
    r.add_argument("--seed", type=int, default=0, help="processing order only; never affects verdicts")
    r.add_argument("--mutations", action="store_true", help="also load the packaged mutation fixtures")

    c = sub.add_parser("construct", help="build a new object from named ones")
    c.add_argument("what", choices=sorted(CONSTRUCT))
    c.add_argument("args", nargs="+")
    c.add_argument("-f", "--file", action="append", dest="files", help="structure file (repeatable)")
    c.add_argument("--name", help="name for the new object")
    c.add_argument("--emit", metavar="PATH", help="write the new object and its dependencies here")
    c.add_argument("--convention", choices=("d", "r"), default="r")

    ls = sub.add_parser("list", help="list the objects of a workspace")
    ls.add_argument("files", nargs="*")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"run": _run, "construct": _construct, "list": _list}[args.cmd](args)
    except QFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _files(args) -> list:
    return list(args.files or [CORE])


def _run(args) -> int:
    files = _files(args)
    if args.mutations:
        files.append(MUTATIONS)
    ws = load(files)
    opts = Options(only=args.only, max_size=args.max_size, convention=args.convention, seed=args.seed)
    rep = run(ws, args.suite, opts, inputs=file_hashes(files))
    text = rep.to_json()
    if args.emit:
        Path(args.emit).write_text(text, encoding="utf-8")
    out_dir = os.environ.get(REPORT_DIR_VAR)
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "report.json").write_text(text, encoding="utf-8")
        (d / "summary.txt").write_text(rep.summary(), encoding="utf-8")
    sys.stdout.write(rep.summary())
    return rep.exit_code


def construct(ws: Workspace, what: str, args: list[str], name: str | None = None, convention: str = "r"):
    """Add the constructed object to ``ws`` and return its entry."""
    if what not in CONSTRUCT:
        raise QFError(f"unknown construction {what!r}")
    if len(args) != ARITY[what]:
        raise QFError(f"construct {what} takes {ARITY[what]} argument(s)")
    kind, recipe, prefix = CONSTRUCT[what]
    fill = {"conv": convention}
    if what == "cover":
        from .groupoid import validate_groupoid
        G = ws[args[0]]
        fill["cover"] = "trivial" if validate_groupoid(G).etale else "germ"
    name = name or ws.fresh_name(prefix.format(*args))
    parse_text(f"{HEADER}\n{kind} {name} = {recipe.format(*args, **fill)}\n", "<construct>", ws)
    return ws.entries[name]


def roundtrip(ws: Workspace, name: str) -> tuple[str, bool]:
    """Emitted text for ``name`` and whether it re-parses to an equal object."""
    text = emit(ws, [name])
    back = parse_text(text, "<emitted>")
    return text, same(ws[name], back[name], ws.entries[name].kind)


def _n(k: int, word: str) -> str:
    return f"{k} {word}" if k == 1 else f"{k} {word}s"


def describe(e) -> str:
    o = e.obj
    if e.kind == "quantale":
        return f"quantale {e.name}: {_n(o.n, 'element')}"
    if e.kind == "cover":
        disc = "discrete" if o.Ghat.G1.is_discrete() else "not discrete"
        return f"cover {e.name}: Ghat has {_n(o.Ghat.G1.n, 'arrow')} on {_n(o.Ghat.G0.n, 'object')}, {disc}"
    if e.kind == "space":
        return f"space {e.name}: {_n(o.n, 'point')}, frame of {_n(o.frame.n, 'element')}"
    if e.kind == "action":
        return f"action {e.name}: {o.G.name} on {_n(o.X.n, 'point')}"
    if e.kind == "bilocale":
        return f"bilocale {e.name}: {o.G.name} - {o.H.name} on {_n(o.X.n, 'point')}"
    return f"{e.kind} {e.name}"


def _construct(args) -> int:
    ws = load(_files(args))
    e = construct(ws, args.what, args.args, args.name, args.convention)
    text, ok = roundtrip(ws, e.name)
    print(describe(e))
    rep = run(ws, SUITE_OF[e.kind], Options(only=e.name, convention=args.convention))
    c = rep.counts()
    print(f"checks: pass {c['pass']}  fail {c['fail']}  incident {c['incident']}  skipped {c['skipped']}")
    print("round trip: " + ("equal" if ok else "DIFFERS"))
    if args.emit:
        Path(args.emit).write_text(text, encoding="utf-8")
    return rep.exit_code if ok else EXIT_INCIDENT


def _list(args) -> int:
    ws = load(_files(args))
    for e in ws.entries.values():
        tag = f"  [mutation: {e.mutation}]" if e.mutation else ""
        print(describe(e) + tag)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
