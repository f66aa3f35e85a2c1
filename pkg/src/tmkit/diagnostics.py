"""Positioned diagnostics and the exceptions that carry them.

Codes are stable; the full list lives in ``CODES``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

CODES = {
    "E001": "lexical error",
    "E002": "syntax error",
    "E003": "for-clause names a different model",
    "E010": "duplicate name",
    "E011": "unresolved reference",
    "E012": "assignment on a stage kind that cannot compute",
    "E013": "reference resolves to the wrong kind of entity",
    "E020": "unknown event in refines",
    "E021": "region reference is not a stage of the model",
    "E022": "empty region",
    "E023": "payload source is not a store",
    "E024": "negative event duration",
    "E030": "unknown event",
    "E031": "non-positive timer duration",
    "E032": "no start declaration",
    "E033": "start binding does not name a transfer stage",
    "E034": "guard references an unknown store",
    "E040": "inject target is not a transfer stage",
    "E041": "negative stimulus time",
    "E050": "illegal flow between stage kinds",
    "E051": "trigger within one machine",
    "E052": "illegal store write",
    "W060": "stage with no incident arcs",
    "W061": "event region is not connected",
    "E062": "refinement cycle",
    "W070": "stage not covered by any event",
    "W080": "no guarded successor matched",
    "W081": "stimulus target has no start binding",
    "E090": "monitor references an unknown event",
    "E091": "monitor capture is not in the event payload",
    "E092": "malformed monitor specification",
    "R100": "occurrence limit exceeded",
    "R101": "evaluation failure",
    "T200": "key template or capture references a missing payload field",
}


@dataclass(frozen=True, order=True)
class SourcePos:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid position {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NOWHERE = SourcePos("<unknown>", 1, 1)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    pos: SourcePos

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        return f"{self.pos}: {self.severity} {self.code} {self.message}"


def error(code: str, message: str, pos: SourcePos | None) -> Diagnostic:
    return Diagnostic("error", code, message, pos or NOWHERE)


def warning(code: str, message: str, pos: SourcePos | None) -> Diagnostic:
    return Diagnostic("warning", code, message, pos or NOWHERE)


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    # stable: equal positions keep emission order
    return sorted(diags, key=lambda d: (d.pos.file, d.pos.line, d.pos.column))


class ParseError(Exception):
    """Raised by every parser when the input has at least one error."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = sort_diagnostics(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


class TMRuntimeError(Exception):
    """A run aborted with an R1xx or T2xx code."""

    def __init__(self, code: str, message: str, pos: SourcePos | None = None):
        self.code = code
        self.pos = pos
        self.message = message
        super().__init__(f"{pos or NOWHERE}: error {code} {message}")
