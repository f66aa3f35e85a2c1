"""Event layer and behavior graph: regions, refinement, guarded successors."""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Union

from .core import (Expr, FieldRef, QualifiedRef, StageGraph, StaticModel, StoreRef,
                   Value, eval_expr, fixed_add, value_kind)
from .diagnostics import SourcePos, TMRuntimeError


@dataclass(frozen=True)
class Capture:
    """One payload entry: ``name: Store.ref`` or ``name: $field``."""
    name: str
    source: Union[StoreRef, FieldRef]
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Event:
    id: str
    region: tuple[QualifiedRef, ...]
    refines: str | None = None
    duration: Decimal = Decimal("0.00")
    payload: tuple[Capture, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @property
    def payload_names(self) -> list[str]:
        return [c.name for c in self.payload]


@dataclass(frozen=True)
class EventLayer:
    model_name: str
    events: tuple[Event, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def get(self, event_id: str) -> Event:
        for e in self.events:
            if e.id == event_id:
                return e
        raise KeyError(event_id)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.events]

    def refinements(self, event_id: str) -> list[str]:
        return [e.id for e in self.events if e.refines == event_id]


@dataclass(frozen=True)
class Start:
    stage: QualifiedRef
    event: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BehaviorEdge:
    src: str
    dst: str
    guard: Expr | None = None
    delay: Decimal | None = None  # seconds, > 0 for timed edges
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @property
    def mode(self) -> str:
        if self.delay is not None:
            return "timed"
        return "guarded" if self.guard is not None else "immediate"


@dataclass(frozen=True)
class BehaviorGraph:
    model_name: str
    starts: tuple[Start, ...] = ()
    edges: tuple[BehaviorEdge, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def start_for(self, stage: QualifiedRef) -> str | None:
        for s in self.starts:
            if s.stage == stage:
                return s.event
        return None

    def outgoing(self, event_id: str) -> list[BehaviorEdge]:
        return [e for e in self.edges if e.src == event_id]

    @property
    def event_ids(self) -> list[str]:
        """Every event named by a start or an edge, first appearance first."""
        seen: dict[str, None] = {}
        for s in self.starts:
            seen.setdefault(s.event)
        for e in self.edges:
            seen.setdefault(e.src)
            seen.setdefault(e.dst)
        return list(seen)


def region_subgraph(event: Event, model: StaticModel) -> StageGraph:
    return model.graph.induced(event.region)


def enabled_successors(graph: BehaviorGraph, occ, stores: Mapping[QualifiedRef, Value]
                       ) -> list[tuple[str, Decimal]]:
    """Successor firings for one occurrence, in edge declaration order.

    Guards see the occurrence payload as ``$`` fields.  Timed edges fire
    unconditionally at ``valid_end + delay``.
    """
    out = []
    for edge in graph.outgoing(occ.event):
        if edge.delay is not None:
            out.append((edge.dst, fixed_add(occ.valid_end, edge.delay)))
        elif edge.guard is None:
            out.append((edge.dst, occ.valid_end))
        else:
            verdict = eval_expr(edge.guard, occ.payload, stores)
            if not isinstance(verdict, bool):
                raise TMRuntimeError("R101", f"guard yields {value_kind(verdict)}, "
                                             "not boolean", edge.guard.pos)
            if verdict:
                out.append((edge.dst, occ.valid_end))
    return out
