"""Deterministic discrete-event executor.

Pending items sit in a heap keyed by ``(time, insertion counter)``; a
stimulus fires the start event bound to its target stage, and every firing
schedules its enabled successors.  Events execute atomically: the clock
never advances inside one.
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping

from .core import (QualifiedRef, StaticModel, Value, eval_expr, fixed_add, value_kind)
from .diagnostics import Diagnostic, SourcePos, TMRuntimeError, warning
from .dynamics import BehaviorGraph, Event, EventLayer, enabled_successors, region_subgraph
from .serial import write_lines
from .temporal import MonitorSpec, TemporalStore, meta_record

__all__ = ["Stimulus", "Scenario", "Cause", "Occurrence", "Trace", "EngineOptions",
           "run", "execute_event", "eval_expr"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stimulus:
    at: Decimal
    target: QualifiedRef
    fields: Mapping[str, Value]
    urgency: str | None = None
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.at < 0:
            raise ValueError("stimulus time must be non-negative")


@dataclass(frozen=True)
class Scenario:
    name: str
    model_name: str
    stimuli: tuple[Stimulus, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cause:
    kind: str  # "stimulus" | "occurrence"
    index: int

    def to_row(self) -> dict:
        return {self.kind: self.index}


@dataclass(frozen=True)
class Occurrence:
    seq: int
    event: str
    valid_start: Decimal
    valid_end: Decimal
    payload: Mapping[str, Value]
    cause: Cause
    urgency: str | None = None

    @property
    def duration(self) -> Decimal:
        return self.valid_end - self.valid_start

    def to_row(self) -> dict:
        return {
            "seq": self.seq,
            "event": self.event,
            "valid_start": self.valid_start,
            "valid_end": self.valid_end,
            "duration": self.duration,
            "payload": dict(self.payload),
            "urgency": self.urgency,
            "cause": self.cause.to_row(),
        }


@dataclass
class Trace:
    occurrences: list[Occurrence]
    final_stores: dict[QualifiedRef, Value]
    warnings: list[Diagnostic]
    records: TemporalStore | None = None

    @property
    def events(self) -> list[str]:
        return [o.event for o in self.occurrences]

    def dump(self, path) -> None:
        write_lines(path, (o.to_row() for o in self.occurrences))


@dataclass(frozen=True)
class EngineOptions:
    max_occurrences: int = 10000
    monitor: MonitorSpec | None = None

    def __post_init__(self):
        if self.max_occurrences < 1:
            raise ValueError("max_occurrences must be >= 1")


def execute_event(event: Event, model: StaticModel, fields: Mapping[str, Value],
                  stores: Mapping[QualifiedRef, Value], clock: Decimal
                  ) -> tuple[dict[str, Value], dict[QualifiedRef, Value], Decimal]:
    """Run one event's assignments and capture its payload.

    Returns ``(payload, writes, valid_end)``.  ``stores`` is not mutated;
    writes are visible to later stages of the same event.
    """
    local = dict(stores)
    writes: dict[QualifiedRef, Value] = {}
    for stage_ref in region_subgraph(event, model).topological_order():
        stage = model.stage(stage_ref)
        if stage.assignment is None:
            continue
        value = eval_expr(stage.assignment.expr, fields, local)
        target = stage.assignment.into
        if target is None:
            continue
        want = model.store(target).value_kind
        if value_kind(value) != want:
            raise TMRuntimeError("R101", f"{stage_ref} writes {value_kind(value)} "
                                         f"into {want} store {target}",
                                 stage.assignment.expr.pos)
        local[target] = value
        writes[target] = value
    payload = {c.name: eval_expr(c.source, fields, local) for c in event.payload}
    return payload, writes, fixed_add(clock, event.duration)


# heap entries: (time, counter, kind, data)
_STIMULUS, _FIRE = 0, 1


def run(model: StaticModel, layer: EventLayer, graph: BehaviorGraph, scenario: Scenario,
        options: EngineOptions | None = None) -> Trace:
    options = options or EngineOptions()
    stores = model.initial_stores()
    events = {e.id: e for e in layer.events}
    occurrences: list[Occurrence] = []
    warnings: list[Diagnostic] = []
    records = TemporalStore() if options.monitor is not None else None

    queue: list = []
    counter = 0

    def push(time, kind, data):
        nonlocal counter
        heapq.heappush(queue, (time, counter, kind, data))
        counter += 1

    for i, stim in enumerate(scenario.stimuli):
        push(stim.at, _STIMULUS, i)

    while queue:
        time, _, kind, data = heapq.heappop(queue)
        if kind == _STIMULUS:
            stim = scenario.stimuli[data]
            event_id = graph.start_for(stim.target)
            if event_id is None:
                warnings.append(warning("W081", f"stimulus {data} targets {stim.target}, "
                                                "which has no start binding", stim.pos))
                continue
            fields, urgency, cause = dict(stim.fields), stim.urgency, Cause("stimulus", data)
        else:
            event_id, fields, urgency, cause = data

        if len(occurrences) >= options.max_occurrences:
            raise TMRuntimeError("R100", f"more than {options.max_occurrences} occurrences "
                                         "(possible cycle in the behavior graph)")
        event = events[event_id]
        payload, writes, valid_end = execute_event(event, model, fields, stores, time)
        stores.update(writes)
        occ = Occurrence(len(occurrences), event_id, time, valid_end, payload, cause, urgency)
        occurrences.append(occ)
        log.debug("t=%s seq=%d %s", time, occ.seq, event_id)

        if records is not None:
            for rec in meta_record(occ, options.monitor, len(records)):
                records.append(rec)

        outgoing = graph.outgoing(event_id)
        successors = enabled_successors(graph, occ, stores)
        if outgoing and not successors and all(e.mode == "guarded" for e in outgoing):
            warnings.append(warning("W080", f"occurrence {occ.seq} of {event_id}: "
                                            "no guard matched", outgoing[0].pos))
        for succ_id, fire_at in successors:
            push(fire_at, _FIRE, (succ_id, fields, urgency, Cause("occurrence", occ.seq)))

    return Trace(occurrences, stores, warnings, records)
