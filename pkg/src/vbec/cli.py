"""``vbec`` command line.

Exit codes:

  0  pass
  1  validation or gate failure (diagnostics on stderr)
  2  usage or I/O error
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence, TextIO

from vbec.diagnostics import Diagnostic, sort_diagnostics
from vbec.model import LinkError, Register, link
from vbec.parser import PRECONDITIONS, SyntaxItem, format_canonical, parse
from vbec.report import emit_json, emit_report, metrics, metrics_json, ratio_text
from vbec.riskengine import assess, residual_report
from vbec.tracegraph import build, canonical_numbers, trace
from vbec.validator import Gate, severity_gate, validate

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

CONFIG_ENV = "VBEC_CONFIG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vbec", description="Validate and analyze Value Register (.vbr) files.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def inputs(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("inputs", nargs="+", type=Path, metavar="FILE.vbr")
        sp.add_argument("--strict", action="store_true", help="treat warnings as failures")

    sp = sub.add_parser("check", help="parse, link and validate")
    inputs(sp)
    sp = sub.add_parser("trace", help="print trace chains for one entity")
    inputs(sp)
    sp.add_argument("--id", required=True, dest="entity")
    sp.add_argument("--direction", choices=("up", "down"), default="up")
    sp = sub.add_parser("risk", help="print risk assessments and residual risks")
    inputs(sp)
    for name in ("report", "metrics"):
        sp = sub.add_parser(name, help=f"emit the {name}")
        inputs(sp)
        sp.add_argument("--format", choices=("md", "json"), default="md" if name == "report" else "json")
        sp.add_argument("--output", type=Path)
    sp = sub.add_parser("number", help="print the canonical chain numbers")
    inputs(sp)
    sp = sub.add_parser("fmt", help="rewrite files in canonical form")
    sp.add_argument("inputs", nargs="+", type=Path, metavar="FILE.vbr")
    sp.add_argument("--check", action="store_true", help="only report files that would change")
    sp = sub.add_parser("init", help="write a register skeleton")
    sp.add_argument("--output", type=Path)
    sp.add_argument("--name", default="New project")
    return p


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


class Failed(Exception):
    def __init__(self, diagnostics: Sequence[Diagnostic]) -> None:
        self.diagnostics = list(diagnostics)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"vbec: cannot read {path}: {exc}") from exc


def load_items(paths: Sequence[Path]) -> list[SyntaxItem]:
    items: list[SyntaxItem] = []
    diags: list[Diagnostic] = []
    env = os.environ.get(CONFIG_ENV)
    if env:
        env_items, env_diags = parse(_read(Path(env)), env)
        diags += env_diags
        stray = [i for i in env_items if i.kind != "config"]
        if stray:
            raise UsageError(f"vbec: {env} ({CONFIG_ENV}) may only contain config blocks")
        items += env_items  # first, so later config blocks override it
    for path in paths:
        file_items, file_diags = parse(_read(path), str(path))
        items += file_items
        diags += file_diags
    if diags:
        raise Failed(diags)
    return items


def load_register(paths: Sequence[Path], strict: bool, err: TextIO) -> tuple[Register, list[Diagnostic]]:
    items = load_items(paths)
    try:
        register = link(items)
    except LinkError as exc:
        raise Failed(exc.diagnostics) from exc
    diags = validate(register)
    if severity_gate(diags, strict) is Gate.FAIL:
        raise Failed(diags)
    _print_diags(diags, err)
    return register, diags


def _print_diags(diags: Sequence[Diagnostic], err: TextIO) -> None:
    for d in sort_diagnostics(diags):
        print(d.render(), file=err)


def _emit(text: str, output: Path | None, out: TextIO) -> None:
    if output is None:
        out.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        output.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"vbec: cannot write {output}: {exc}") from exc


def init_template(name: str) -> str:
    lines = [f'project "{name}" {{', '  soi: "Describe the system of interest and its concept of operation"']
    lines += [f"  precondition {p}: no" for p in PRECONDITIONS]
    lines += ["}", "", "# c1..c7: the seven prioritization criteria; remove any not yet agreed",
              "ranking {", "  criteria: [c1, c2, c3, c4, c5, c6, c7]", "  order: []", "}", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_fmt(args, out: TextIO, err: TextIO) -> int:
    rewrites: list[tuple[Path, str]] = []
    diags: list[Diagnostic] = []
    for path in args.inputs:
        source = _read(path)
        items, file_diags = parse(source, str(path))
        diags += file_diags
        text = format_canonical(items)
        if text != source:
            rewrites.append((path, text))
    if diags:
        raise Failed(diags)
    if args.check:
        for path, _ in rewrites:
            print(f"would reformat {path}", file=err)
        return EXIT_FAILED if rewrites else EXIT_OK
    for path, text in rewrites:
        _emit(text, path, out)
    return EXIT_OK


def _cmd_init(args, out: TextIO, err: TextIO) -> int:
    if args.output is not None and args.output.exists():
        raise UsageError(f"vbec: {args.output} already exists")
    _emit(init_template(args.name), args.output, out)
    return EXIT_OK


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if args.command == "fmt":
            return _cmd_fmt(args, out, err)
        if args.command == "init":
            return _cmd_init(args, out, err)

        register, diags = load_register(args.inputs, args.strict, err)

        if args.command == "check":
            n_warn = sum(not d.is_error for d in diags)
            print(f"ok: {len(register.by_id)} entities, {n_warn} warning(s)", file=err)
        elif args.command == "trace":
            graph = build(register)
            try:
                chains = trace(graph, args.entity, args.direction)
            except KeyError:
                print(f"vbec: unknown or untraceable entity '{args.entity}'", file=err)
                return EXIT_USAGE
            for chain in chains:
                print(" -> ".join(chain), file=out)
        elif args.command == "risk":
            assessments = assess(register)
            for a in assessments:
                state = "satisfied" if a.satisfied else "UNSATISFIED"
                print(f"{a.threat}\t{a.evr}\tscore={a.score}\t{a.band.value}\t{a.obligation.value}\t{state}",
                      file=out)
            print("residual risks:", file=out)
            for threat, score, text in residual_report(assessments):
                print(f"  {threat}\t{score}\t{text}", file=out)
        elif args.command == "number":
            for eid, num in canonical_numbers(register).items():
                print(f"{num}\t{eid}", file=out)
        elif args.command == "report":
            assessments = assess(register)
            m = metrics(register, assessments)
            if args.format == "json":
                text = emit_json(register, assessments, m, diags)
            else:
                text = emit_report(register, assessments, m)
            _emit(text, args.output, out)
        elif args.command == "metrics":
            m = metrics(register)
            if args.format == "json":
                text = json.dumps(metrics_json(m), sort_keys=True, indent=2)
            else:
                rows = [f"- {k}: {ratio_text(v) if isinstance(v, Fraction) else v}"
                        for k, v in vars(m).items()]
                text = "\n".join(["# Metrics", ""] + rows)
            _emit(text, args.output, out)
        return EXIT_OK
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except Failed as exc:
        _print_diags(exc.diagnostics, err)
        return EXIT_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
