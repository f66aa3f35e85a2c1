"""Temporal level: meta-event records in an append-only bitemporal store.

Valid time is the simulated time of the generating occurrence; transaction
time is the record's append position (``txn_seq``).  Queries are linear
scans over a per-key index.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Mapping

from .core import Value, fixed, fixed_sub, format_fixed
from .diagnostics import SourcePos, TMRuntimeError
from .serial import read_lines, write_lines

Instant = Decimal   # >= 0, two fractional digits
Interval = Decimal  # signed duration


def instant(value) -> Instant:
    t = fixed(value)
    if t < 0:
        raise ValueError(f"instant must be non-negative: {value!r}")
    return t


def subtract(a: Instant, b: Instant) -> Interval:
    return fixed_sub(a, b)


@dataclass(frozen=True)
class Period:
    """Closed span ``[start, end]``."""
    start: Instant
    end: Instant

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"period start {self.start} after end {self.end}")

    def __str__(self) -> str:
        return f"[{format_fixed(self.start)}, {format_fixed(self.end)}]"


def duration(p: Period) -> Interval:
    return subtract(p.end, p.start)


def overlaps(p: Period, q: Period) -> bool:
    # closed bounds: touching endpoints overlap
    return p.start <= q.end and q.start <= p.end


def contains(p: Period, t: Instant) -> bool:
    return p.start <= t <= p.end


# ---------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class Selection:
    key_template: str
    events: tuple[str, ...]
    captures: tuple[str, ...]
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MonitorSpec:
    mode: str = "all"  # "all" | "selective"
    selections: tuple[Selection, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("all", "selective"):
            raise ValueError(f"unknown monitor mode {self.mode!r}")
        if self.mode == "selective" and not self.selections:
            raise ValueError("selective monitor needs at least one selection")
        if self.mode == "all" and self.selections:
            raise ValueError("monitor-all takes no selections")


MONITOR_ALL = MonitorSpec("all")

_PLACEHOLDER = re.compile(r"\{([A-Za-z][A-Za-z0-9_]*)\}")


def template_fields(template: str) -> list[str]:
    return _PLACEHOLDER.findall(template)


def _text(value: Value) -> str:
    if isinstance(value, Decimal):
        return format_fixed(value)
    return str(value)


def render_key(template: str, payload: Mapping[str, Value],
               pos: SourcePos | None = None) -> str:
    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name not in payload:
            raise TMRuntimeError("T200", f"key template {template!r} needs "
                                         f"missing payload field {name!r}", pos)
        return _text(payload[name])

    return _PLACEHOLDER.sub(sub, template)


# ---------------------------------------------------------------------------
# records and the store


@dataclass(frozen=True)
class TemporalRecord:
    txn_seq: int
    key: str
    event: str
    valid_start: Instant
    valid_end: Instant
    payload: Mapping[str, Value]

    @property
    def duration(self) -> Interval:
        return subtract(self.valid_end, self.valid_start)

    @property
    def valid(self) -> Period:
        return Period(self.valid_start, self.valid_end)

    def to_row(self) -> dict:
        return {
            "txn": self.txn_seq,
            "key": self.key,
            "event": self.event,
            "valid_start": self.valid_start,
            "valid_end": self.valid_end,
            "duration": self.duration,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_row(cls, row: dict) -> "TemporalRecord":
        rec = cls(int(row["txn"]), row["key"], row["event"], instant(row["valid_start"]),
                  instant(row["valid_end"]), dict(row["payload"]))
        if "duration" in row and fixed(row["duration"]) != rec.duration:
            raise ValueError(f"record {rec.txn_seq}: duration disagrees with valid time")
        return rec


def meta_record(occ, spec: MonitorSpec, next_txn: int = 0) -> list[TemporalRecord]:
    """Records generated by one occurrence, numbered from ``next_txn``."""
    base = dict(occ.payload)
    if spec.mode == "all":
        return [TemporalRecord(next_txn, occ.event, occ.event, occ.valid_start,
                               occ.valid_end, base)]
    out = []
    for sel in spec.selections:
        if occ.event not in sel.events:
            continue
        key = render_key(sel.key_template, base, sel.pos)
        captured = {}
        for name in sel.captures:
            if name not in base:
                raise TMRuntimeError("T200", f"capture {name!r} missing from "
                                             f"{occ.event} payload", sel.pos)
            captured[name] = base[name]
        out.append(TemporalRecord(next_txn + len(out), key, occ.event,
                                  occ.valid_start, occ.valid_end, captured))
    return out


class TemporalStore:
    """Append-only record sequence; ``txn_seq`` equals the append position."""

    def __init__(self, records: Iterable[TemporalRecord] = ()):
        self._records: list[TemporalRecord] = []
        self._by_key: dict[str, list[TemporalRecord]] = {}
        for r in records:
            self.append(r)

    def append(self, record: TemporalRecord) -> TemporalRecord:
        if record.txn_seq != len(self._records):
            raise ValueError(f"txn_seq {record.txn_seq} != position {len(self._records)}")
        self._records.append(record)
        self._by_key.setdefault(record.key, []).append(record)
        return record

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TemporalRecord]:
        return iter(self._records)

    @property
    def records(self) -> tuple[TemporalRecord, ...]:
        return tuple(self._records)

    @property
    def keys(self) -> list[str]:
        return list(self._by_key)

    def history(self, key: str) -> list[TemporalRecord]:
        return list(self._by_key.get(key, ()))

    def as_of(self, key: str, t: Instant) -> TemporalRecord | None:
        # latest valid_start <= t; equal valid_start -> later transaction wins
        best = None
        for r in self._by_key.get(key, ()):
            if r.valid_start <= t and (best is None or r.valid_start >= best.valid_start):
                best = r
        return best

    def as_known_at(self, key: str, txn: int) -> list[TemporalRecord]:
        return [r for r in self._by_key.get(key, ()) if r.txn_seq <= txn]

    def snapshot(self, t: Instant) -> dict[str, TemporalRecord]:
        out = {}
        for key in self._by_key:
            r = self.as_of(key, t)
            if r is not None:
                out[key] = r
        return out

    def dump(self, path) -> None:
        write_lines(path, (r.to_row() for r in self._records))

    @classmethod
    def load(cls, path) -> "TemporalStore":
        return cls(TemporalRecord.from_row(row) for row in read_lines(path))


def as_of(store: TemporalStore, key: str, t: Instant) -> TemporalRecord | None:
    return store.as_of(key, t)


def history(store: TemporalStore, key: str) -> list[TemporalRecord]:
    return store.history(key)


def as_known_at(store: TemporalStore, key: str, txn: int) -> list[TemporalRecord]:
    return store.as_known_at(key, txn)


def snapshot(store: TemporalStore, t: Instant) -> dict[str, TemporalRecord]:
    return store.snapshot(t)
