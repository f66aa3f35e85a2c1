"""Shared fixtures plus the acceptance summary printed at the end of a run."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

import tmkit
from tmkit.core import StaticModel
from tmkit.diagnostics import ParseError
from tmkit.dsl import parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario
from tmkit.dynamics import BehaviorGraph, EventLayer

CORPUS = Path(tmkit.__file__).parent / "corpus"
GOLDEN = Path(__file__).parent / "golden"


@dataclass
class Corpus:
    name: str
    dir: Path
    model: StaticModel
    layer: EventLayer
    graph: BehaviorGraph

    def path(self, suffix: str) -> Path:
        return self.dir / f"{self.name}{suffix}"

    def scenario(self, name: str):
        p = self.dir / f"{name}.tms"
        return parse_scenario(p.read_text(), self.model, str(p))

    def monitor(self, name: str):
        p = self.dir / f"{name}.tmm"
        return parse_monitor(p.read_text(), self.layer, str(p))

    @property
    def scenario_names(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.tms"))


def load_corpus(name: str) -> Corpus:
    d = CORPUS / name
    model = parse_model((d / f"{name}.tm").read_text(), f"{name}.tm")
    layer = parse_events((d / f"{name}.tme").read_text(), model, f"{name}.tme")
    graph = parse_behavior((d / f"{name}.tmb").read_text(), layer, f"{name}.tmb", model=model)
    return Corpus(name, d, model, layer, graph)


@pytest.fixture(scope="session")
def bank() -> Corpus:
    return load_corpus("bank")


@pytest.fixture(scope="session")
def flower() -> Corpus:
    return load_corpus("flower")


def codes_of(fn, *args, **kwargs) -> list[str]:
    """Codes from a parser failure or from a returned diagnostic list."""
    try:
        result = fn(*args, **kwargs)
    except ParseError as e:
        return e.codes
    return [d.code for d in result] if isinstance(result, list) else []


# acceptance summary ---------------------------------------------------------

CRITERIA = {
    1: "corpus validity",
    2: "event coverage",
    3: "bank scenario replay",
    4: "meta-event record golden file",
    5: "temporal query oracle",
    6: "determinism",
    7: "timer semantics",
    8: "monitor-all cardinality",
    9: "rendering",
    10: "negative validation",
}
_results: dict[int, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for n in getattr(report, "criteria", ()):
        _results.setdefault(n, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    report.criteria = [m.args[0] for m in item.iter_markers("acceptance")]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _results.get(n)
        if runs is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        tr.write_line(f"criterion {n:2d} {title:<32} {status}")
