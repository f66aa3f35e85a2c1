"""``tm``: check, render, simulate and query TM models.

Exit codes: 0 success, 1 diagnostics with errors, 2 usage error,
3 runtime error (R1xx / T2xx).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagnostics import Diagnostic, ParseError, TMRuntimeError, sort_diagnostics
from .dsl import parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario
from .engine import EngineOptions, run
from .render import dot_behavior, dot_events, dot_static
from .serial import encode
from .temporal import MONITOR_ALL, TemporalStore, instant
from .validate import coverage_lint, validate_behavior, validate_events, validate_static

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
KINDS = {".tm": "model", ".tme": "events", ".tmb": "behavior", ".tms": "scenario",
         ".tmm": "monitor"}


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _report(diags: list[Diagnostic]) -> bool:
    for d in sort_diagnostics(diags):
        print(d, file=sys.stderr)
    return any(d.is_error for d in diags)


class _Loader:
    """Parses and validates files in pipeline order, reporting as it goes."""

    def __init__(self):
        self.failed = False

    def parse(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as e:
            _report(e.diagnostics)
            self.failed = True
            return None

    def check(self, diags):
        if _report(diags):
            self.failed = True

    def model(self, path):
        m = self.parse(parse_model, _read(path), path)
        if m is not None:
            self.check(validate_static(m))
        return m

    def events(self, path, model):
        layer = self.parse(parse_events, _read(path), model, path)
        if layer is not None:
            self.check(validate_events(layer, model) + coverage_lint(layer, model))
        return layer

    def behavior(self, path, layer, model):
        graph = self.parse(parse_behavior, _read(path), layer, path, model=model)
        if graph is not None:
            self.check(validate_behavior(graph, layer, model))
        return graph


def cmd_check(args) -> int:
    by_kind: dict[str, list[str]] = {k: [] for k in KINDS.values()}
    for f in args.files:
        kind = KINDS.get(Path(f).suffix)
        if kind is None:
            raise UsageError(f"{f}: unknown file kind (expected one of {', '.join(KINDS)})")
        by_kind[kind].append(f)
    if len(by_kind["model"]) != 1:
        raise UsageError("check needs exactly one .tm model file")
    if len(by_kind["events"]) > 1 or len(by_kind["behavior"]) > 1:
        raise UsageError("check takes at most one .tme and one .tmb file")
    if (by_kind["behavior"] or by_kind["monitor"]) and not by_kind["events"]:
        raise UsageError(".tmb and .tmm files need the .tme event layer")

    ld = _Loader()
    model = ld.model(by_kind["model"][0])
    if model is not None:
        for path in by_kind["scenario"]:
            ld.parse(parse_scenario, _read(path), model, path)
        layer = ld.events(by_kind["events"][0], model) if by_kind["events"] else None
        if layer is not None:
            for path in by_kind["behavior"]:
                ld.behavior(path, layer, model)
            for path in by_kind["monitor"]:
                ld.parse(parse_monitor, _read(path), layer, path)
    return EXIT_DIAGNOSTICS if ld.failed else EXIT_OK


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_render(args) -> int:
    ld = _Loader()
    model = ld.model(args.model)
    if ld.failed:
        return EXIT_DIAGNOSTICS
    if args.view == "static":
        _write(dot_static(model), args.out)
        return EXIT_OK
    if not args.events:
        raise UsageError(f"--view {args.view} needs --events")
    layer = ld.events(args.events, model)
    if ld.failed:
        return EXIT_DIAGNOSTICS
    if args.view == "events":
        if args.event is not None and args.event not in layer.ids:
            raise UsageError(f"unknown event {args.event}")
        _write(dot_events(model, layer, args.event), args.out)
        return EXIT_OK
    if not args.behavior:
        raise UsageError("--view behavior needs --behavior")
    graph = ld.behavior(args.behavior, layer, model)
    if ld.failed:
        return EXIT_DIAGNOSTICS
    _write(dot_behavior(graph), args.out)
    return EXIT_OK


def cmd_sim(args) -> int:
    if args.out and not (args.monitor or args.monitor_all):
        raise UsageError("--out needs --monitor or --monitor-all")
    if args.monitor and args.monitor_all:
        raise UsageError("--monitor and --monitor-all are exclusive")
    ld = _Loader()
    model = ld.model(args.model)
    if ld.failed:
        return EXIT_DIAGNOSTICS
    layer = ld.events(args.events, model)
    if ld.failed:
        return EXIT_DIAGNOSTICS
    graph = ld.behavior(args.behavior, layer, model)
    scenario = ld.parse(parse_scenario, _read(args.scenario), model, args.scenario)
    monitor = MONITOR_ALL if args.monitor_all else None
    if args.monitor:
        monitor = ld.parse(parse_monitor, _read(args.monitor), layer, args.monitor)
    if ld.failed:
        return EXIT_DIAGNOSTICS

    try:
        trace = run(model, layer, graph, scenario,
                    EngineOptions(max_occurrences=args.max_occurrences, monitor=monitor))
    except TMRuntimeError as e:
        print(e, file=sys.stderr)
        return EXIT_RUNTIME
    _report(trace.warnings)
    if args.trace:
        trace.dump(args.trace)
    else:
        for occ in trace.occurrences:
            print(encode(occ.to_row()))
    if args.out:
        trace.records.dump(args.out)
    return EXIT_OK


def cmd_query(args) -> int:
    try:
        store = TemporalStore.load(args.db)
    except OSError as e:
        raise UsageError(f"cannot read {args.db}: {e}") from None
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"{args.db}: malformed record file ({e})") from None

    if args.snapshot is not None:
        rows = list(store.snapshot(args.snapshot).values())
    else:
        if args.key is None:
            raise UsageError("--as-of, --history and --as-known need --key")
        if args.as_of is not None:
            hit = store.as_of(args.key, args.as_of)
            rows = [hit] if hit is not None else []
        elif args.as_known is not None:
            rows = store.as_known_at(args.key, args.as_known)
        else:
            rows = store.history(args.key)
    for r in rows:
        print(encode(r.to_row()))
    return EXIT_OK


def _instant_arg(text: str):
    try:
        return instant(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate source files; writes nothing")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("render", help="emit Graphviz DOT")
    p.add_argument("--model", required=True)
    p.add_argument("--events")
    p.add_argument("--behavior")
    p.add_argument("--view", choices=("static", "events", "behavior"), default="static")
    p.add_argument("--event", help="event id for --view events (default: all)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("sim", help="run a scenario")
    p.add_argument("--model", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--behavior", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--monitor")
    p.add_argument("--monitor-all", action="store_true")
    p.add_argument("--out", help="temporal record file")
    p.add_argument("--trace", help="trace file (default: standard output)")
    p.add_argument("--max-occurrences", type=_positive_int, default=10000)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("query", help="query a temporal record file")
    p.add_argument("--db", required=True)
    p.add_argument("--key")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--as-of", type=_instant_arg)
    group.add_argument("--history", action="store_true")
    group.add_argument("--as-known", type=int)
    group.add_argument("--snapshot", type=_instant_arg)
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"tm: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
