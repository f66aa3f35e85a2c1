"""Structural legality of static models, event layers and behavior graphs."""
from __future__ import annotations

from dataclasses import dataclass

from .core import (COMPUTING_KINDS, StageKind, StaticModel, owner, store_refs)
from .diagnostics import Diagnostic, error, sort_diagnostics, warning
from .dynamics import BehaviorGraph, EventLayer, region_subgraph

C, P, RL, T, RC = (StageKind.CREATE, StageKind.PROCESS, StageKind.RELEASE,
                   StageKind.TRANSFER, StageKind.RECEIVE)


@dataclass(frozen=True)
class AdjacencyRule:
    from_kind: StageKind
    to_kind: StageKind
    scope: str  # "intra" | "inter"


# Closed table: a stage-to-stage flow is legal only if listed here.
ADJACENCY = (
    AdjacencyRule(RC, P, "intra"),
    AdjacencyRule(RC, RL, "intra"),
    AdjacencyRule(P, RL, "intra"),
    AdjacencyRule(P, C, "intra"),
    AdjacencyRule(C, P, "intra"),
    AdjacencyRule(C, RL, "intra"),
    AdjacencyRule(RL, T, "intra"),
    AdjacencyRule(T, RC, "inter"),
    AdjacencyRule(T, T, "inter"),
)
_LEGAL = frozenset((r.from_kind, r.to_kind, r.scope) for r in ADJACENCY)
STORE_WRITERS = COMPUTING_KINDS


def flow_allowed(src: StageKind, dst: StageKind, scope: str) -> bool:
    return (src, dst, scope) in _LEGAL


def validate_static(model: StaticModel) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    index = model.index
    for f in model.flows:
        a, b = index.get(f.src), index.get(f.dst)
        if a is None or b is None or a.kind != "stage" or b.kind == "thimac":
            diags.append(error("E011", f"flow {f.src} -> {f.dst} has an unresolved or "
                                       "non-stage endpoint", f.pos))
            continue
        if b.kind == "store":
            if a.entity.kind not in STORE_WRITERS:
                diags.append(error("E052", f"{a.entity.kind} stage {f.src} cannot write "
                                           f"store {f.dst}", f.pos))
            continue
        scope = "intra" if owner(f.src) == owner(f.dst) else "inter"
        if not flow_allowed(a.entity.kind, b.entity.kind, scope):
            diags.append(error("E050", f"illegal {scope}-machine flow "
                                       f"{a.entity.kind} -> {b.entity.kind} "
                                       f"({f.src} -> {f.dst})", f.pos))
    for r, stage in model.stages():
        if stage.assignment is None:
            continue
        if stage.kind not in COMPUTING_KINDS:
            diags.append(error("E052", f"{stage.kind} stage {r} carries an assignment",
                               stage.pos))
        into = stage.assignment.into
        if into is not None:
            res = index.get(into)
            if res is None or res.kind != "store":
                diags.append(error("E052", f"{r} writes into {into}, which is not a store",
                                   stage.pos))
        for sr in store_refs(stage.assignment.expr):
            res = index.get(sr.ref)
            if res is None or res.kind != "store":
                diags.append(error("E011", f"{r} reads {sr.ref}, which is not a store",
                                   sr.pos or stage.pos))
    for t in model.triggers:
        a, b = index.get(t.src), index.get(t.dst)
        if a is None or b is None or a.kind != "stage" or b.kind != "stage":
            diags.append(error("E011", f"trigger {t.src} ~> {t.dst} has an unresolved or "
                                       "non-stage endpoint", t.pos))
        elif owner(t.src) == owner(t.dst):
            diags.append(error("E051", f"trigger {t.src} ~> {t.dst} stays inside "
                                       f"{owner(t.src)}", t.pos))
    graph = model.graph
    for r, stage in model.stages():
        if graph.incident(r) == 0:
            diags.append(warning("W060", f"stage {r} has no flows, triggers or store writes",
                                 stage.pos))
    return sort_diagnostics(diags)


def validate_events(layer: EventLayer, model: StaticModel) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    index = model.index
    ids = set()
    for e in layer.events:
        if e.id in ids:
            diags.append(error("E010", f"duplicate event {e.id}", e.pos))
        ids.add(e.id)
    parents = {e.id: e.refines for e in layer.events}

    for e in layer.events:
        if e.refines is not None and e.refines not in ids:
            diags.append(error("E020", f"{e.id} refines unknown event {e.refines}", e.pos))
        if not e.region:
            diags.append(error("E022", f"event {e.id} has an empty region", e.pos))
        resolved = True
        for r in e.region:
            res = index.get(r)
            if res is None or res.kind != "stage":
                diags.append(error("E021", f"region of {e.id}: {r} is not a stage", e.pos))
                resolved = False
        if e.duration < 0:
            diags.append(error("E024", f"event {e.id} has negative duration", e.pos))
        for cap in e.payload:
            ref = getattr(cap.source, "ref", None)
            if ref is not None and (index.get(ref) is None or index[ref].kind != "store"):
                diags.append(error("E023", f"{e.id} payload {cap.name}: {ref} is not a store",
                                   cap.pos or e.pos))
        if resolved and e.region and not region_subgraph(e, model).is_weakly_connected():
            diags.append(warning("W061", f"region of {e.id} is not connected by flows or "
                                         "triggers", e.pos))

    reported: set[str] = set()
    for e in layer.events:
        chain = [e.id]
        cur = parents.get(e.id)
        while cur is not None and cur in parents and cur not in chain:
            chain.append(cur)
            cur = parents[cur]
        if cur is not None and cur in chain:
            cycle = chain[chain.index(cur):]
            if not reported.intersection(cycle):
                reported.update(cycle)
                diags.append(error("E062", "refinement cycle " + " -> ".join(cycle + [cur]),
                                   e.pos))
    return sort_diagnostics(diags)


def coverage_lint(layer: EventLayer, model: StaticModel) -> list[Diagnostic]:
    covered = set()
    for e in layer.events:
        covered.update(e.region)
    return [warning("W070", f"stage {r} is not part of any event region", s.pos)
            for r, s in model.stages() if r not in covered]


def validate_behavior(graph: BehaviorGraph, layer: EventLayer,
                      model: StaticModel | None = None) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    known = set(layer.ids)
    if not graph.starts:
        diags.append(error("E032", "behavior graph has no start declaration", graph.pos))
    for s in graph.starts:
        if s.event not in known:
            diags.append(error("E030", f"unknown event {s.event}", s.pos))
        if model is not None:
            res = model.index.get(s.stage)
            if res is None or res.kind != "stage" or res.entity.kind != StageKind.TRANSFER:
                diags.append(error("E033", f"start binding {s.stage} is not a transfer stage",
                                   s.pos))
    for edge in graph.edges:
        for end in (edge.src, edge.dst):
            if end not in known:
                diags.append(error("E030", f"unknown event {end}", edge.pos))
        if edge.delay is not None and edge.delay <= 0:
            diags.append(error("E031", f"timed edge {edge.src} -> {edge.dst} needs a positive "
                                       "duration", edge.pos))
        if edge.guard is not None and model is not None:
            for sr in store_refs(edge.guard):
                res = model.index.get(sr.ref)
                if res is None or res.kind != "store":
                    diags.append(error("E034", f"guard reads {sr.ref}, which is not a store",
                                       sr.pos or edge.pos))
    return sort_diagnostics(diags)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)
