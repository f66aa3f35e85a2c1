"""Canonical DSL serializer.

Output reparses to a structurally equal value.  References are always
written as absolute paths, numbers with two decimals.
"""
from __future__ import annotations

from decimal import Decimal

from ..core import BinOp, Expr, FieldRef, NumberLit, StaticModel, StoreRef, TextLit, Thimac, format_fixed
from ..dynamics import BehaviorGraph, EventLayer
from ..engine import Scenario
from ..temporal import MonitorSpec

_PRECEDENCE = {"or": 1, "and": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
               "+": 4, "-": 4}


def quote(text: str) -> str:
    body = (text.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{body}"'


def format_literal(value) -> str:
    if isinstance(value, Decimal):
        return format_fixed(value)
    return quote(value)


def format_expr(expr: Expr) -> str:
    if isinstance(expr, NumberLit):
        return format_fixed(expr.value)
    if isinstance(expr, TextLit):
        return quote(expr.value)
    if isinstance(expr, FieldRef):
        return f"${expr.name}"
    if isinstance(expr, StoreRef):
        return str(expr.ref)
    prec = _PRECEDENCE[expr.op]
    left, right = format_expr(expr.left), format_expr(expr.right)
    if isinstance(expr.left, BinOp) and _PRECEDENCE[expr.left.op] < prec:
        left = f"({left})"
    if isinstance(expr.right, BinOp) and _PRECEDENCE[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def _thimac(t: Thimac, depth: int, out: list[str]):
    pad = "  " * depth
    out.append(f"{pad}thimac {t.name} {{")
    inner = pad + "  "
    for s in t.stores:
        out.append(f"{inner}store {s.name}: {s.value_kind} = {format_literal(s.initial)}")
    for s in t.stages:
        line = f"{inner}{s.kind.value} {s.name}"
        if s.assignment is not None:
            line += f" = {format_expr(s.assignment.expr)}"
            if s.assignment.into is not None:
                line += f" into {s.assignment.into}"
        if s.label is not None:
            line += f" {quote(s.label)}"
        out.append(line)
    for c in t.children:
        _thimac(c, depth + 1, out)
    out.append(f"{pad}}}")


def format_model(model: StaticModel) -> str:
    out = [f"model {model.name} {{"]
    for root in model.roots:
        _thimac(root, 1, out)
    out.extend(f"  flow {f.src} -> {f.dst}" for f in model.flows)
    out.extend(f"  trigger {t.src} ~> {t.dst}" for t in model.triggers)
    out.append("}")
    return "\n".join(out) + "\n"


def format_events(layer: EventLayer) -> str:
    out = [f"events for {layer.model_name} {{"]
    for e in layer.events:
        line = f"  event {e.id}"
        if e.refines is not None:
            line += f" refines {e.refines}"
        line += " over { " + ", ".join(str(r) for r in e.region) + " }"
        if e.duration:
            line += f" lasts {format_fixed(e.duration)}"
        if e.payload:
            caps = ", ".join(f"{c.name}: {format_expr(c.source)}" for c in e.payload)
            line += " payload { " + caps + " }"
        out.append(line)
    out.append("}")
    return "\n".join(out) + "\n"


def format_behavior(graph: BehaviorGraph) -> str:
    out = [f"behavior for {graph.model_name} {{"]
    out.extend(f"  start {s.event} on {s.stage}" for s in graph.starts)
    for e in graph.edges:
        line = f"  {e.src} -> {e.dst}"
        if e.guard is not None:
            line += f" when {format_expr(e.guard)}"
        elif e.delay is not None:
            line += f" after {format_fixed(e.delay)}"
        out.append(line)
    out.append("}")
    return "\n".join(out) + "\n"


def format_scenario(scenario: Scenario) -> str:
    out = [f"scenario {scenario.name} for {scenario.model_name} {{"]
    for s in scenario.stimuli:
        fields = ", ".join(f"{k} = {format_literal(v)}" for k, v in s.fields.items())
        line = f"  at {format_fixed(s.at)}: inject {s.target} {{ {fields} }}" if fields else \
            f"  at {format_fixed(s.at)}: inject {s.target} {{ }}"
        if s.urgency is not None:
            line += f" urgency {quote(s.urgency)}"
        out.append(line)
    out.append("}")
    return "\n".join(out) + "\n"


def format_monitor(spec: MonitorSpec) -> str:
    if spec.mode == "all":
        return "monitor all\n"
    lines = [f"monitor {quote(s.key_template)} on {{ {', '.join(s.events)} }} "
             f"capture {{ {', '.join(s.captures)} }}" for s in spec.selections]
    return "\n".join(lines) + "\n"
