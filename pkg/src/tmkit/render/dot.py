"""Graphviz DOT output for the static, event and behavior levels."""
from __future__ import annotations

import re
from decimal import Decimal

from ..core import QualifiedRef, StaticModel, Thimac
from ..dynamics import BehaviorGraph, EventLayer
from .text import format_expr

# assigned to selected events in event-id order, cycling
PALETTE = ("#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
           "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f")


def q(text: str) -> str:
    """Quote a DOT id or string; real newlines become ``\\n``."""
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def event_sort_key(event_id: str):
    """Natural order: E2 < E3 < E3a < E10."""
    return [(0, int(part), "") if part.isdigit() else (1, 0, part)
            for part in re.findall(r"\d+|\D+", event_id)]


def seconds(d: Decimal) -> str:
    text = f"{d:.2f}".rstrip("0").rstrip(".")
    return text or "0"


def _attrs(pairs: dict) -> str:
    return "[" + ", ".join(f"{k}={v}" for k, v in pairs.items()) + "]"


def _cluster(t: Thimac, path: QualifiedRef, depth: int, fills: dict, out: list[str]):
    pad = "  " * depth
    out.append(f"{pad}subgraph {q('cluster_' + str(path))} {{")
    out.append(f"{pad}  label={q(t.name)};")
    for s in t.stores:
        r = path.child(s.name)
        out.append(f"{pad}  {q(str(r))} {_attrs({'shape': 'cylinder', 'label': q(s.name)})};")
    for s in t.stages:
        r = path.child(s.name)
        attrs = {"shape": "box", "label": q(f"{s.kind.value}\n{s.name}")}
        if s.label:
            attrs["tooltip"] = q(s.label)
        if r in fills:
            attrs["style"] = "filled"
            attrs["fillcolor"] = q(fills[r])
        out.append(f"{pad}  {q(str(r))} {_attrs(attrs)};")
    for c in t.children:
        _cluster(c, path.child(c.name), depth + 1, fills, out)
    out.append(f"{pad}}}")


def _static(model: StaticModel, fills: dict, comment: str | None = None) -> str:
    out = [f"digraph {q(model.name)} {{", "  compound=true;", "  rankdir=LR;"]
    if comment:
        out.append(f"  label={q(comment)};")
    for root in model.roots:
        _cluster(root, QualifiedRef((root.name,)), 1, fills, out)
    graph = model.graph
    for a in graph.flow_arcs():
        out.append(f"  {q(str(a.src))} -> {q(str(a.dst))};")
    for stage, store in graph.store_writes:
        out.append(f"  {q(str(stage))} -> {q(str(store))} [arrowhead=box];")
    for a in graph.trigger_arcs():
        out.append(f"  {q(str(a.src))} -> {q(str(a.dst))} [style=dashed];")
    out.append("}")
    return "\n".join(out) + "\n"


def dot_static(model: StaticModel) -> str:
    return _static(model, {})


def dot_events(model: StaticModel, layer: EventLayer, selection: str | None = None) -> str:
    """Static view with region stages filled, one color per selected event.

    ``selection`` is an event id, or None / "all" for every event.  A stage
    in several selected regions takes the color of the first event in
    event-id order.
    """
    if selection in (None, "all"):
        chosen = sorted(layer.ids, key=event_sort_key)
    else:
        layer.get(selection)  # KeyError for unknown ids
        chosen = [selection]
    fills: dict[QualifiedRef, str] = {}
    legend = []
    for i, eid in enumerate(chosen):
        color = PALETTE[i % len(PALETTE)]
        legend.append(f"{eid}={color}")
        for r in layer.get(eid).region:
            fills.setdefault(r, color)
    return _static(model, fills, "events: " + " ".join(legend))


def dot_behavior(graph: BehaviorGraph) -> str:
    out = [f"digraph {q(graph.model_name + ' behavior')} {{", "  rankdir=TB;"]
    starts: dict[str, list[str]] = {}
    for s in graph.starts:
        starts.setdefault(s.event, []).append(str(s.stage))
    for eid in graph.event_ids:
        attrs = {"shape": "ellipse", "label": q(eid)}
        if eid in starts:
            attrs["peripheries"] = "2"
            attrs["xlabel"] = q("on " + ", ".join(starts[eid]))
        out.append(f"  {q(eid)} {_attrs(attrs)};")
    for e in graph.edges:
        if e.guard is not None:
            extra = " " + _attrs({"label": q("when " + format_expr(e.guard))})
        elif e.delay is not None:
            extra = " " + _attrs({"label": q(f"after {seconds(e.delay)}s")})
        else:
            extra = ""
        out.append(f"  {q(e.src)} -> {q(e.dst)}{extra};")
    out.append("}")
    return "\n".join(out) + "\n"
