"""Acceptance criteria 1-10, each at its stated tolerance.

Every test carries ``@pytest.mark.acceptance(n)``; conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""
from __future__ import annotations

import random
import time
from decimal import Decimal

import pydot
import pytest

from conftest import GOLDEN
from tmkit.cli import main
from tmkit.core import fixed, ref
from tmkit.diagnostics import ParseError
from tmkit.dsl import parse_behavior, parse_events, parse_model, parse_scenario
from tmkit.engine import EngineOptions, Scenario, Stimulus, run
from tmkit.render import dot_behavior, dot_events, dot_static
from tmkit.temporal import MONITOR_ALL
from tmkit.validate import coverage_lint, validate_behavior, validate_events, validate_static

D = Decimal
CORPORA = ("bank", "flower")


# 1 ---------------------------------------------------------------------------

@pytest.mark.acceptance(1)
@pytest.mark.parametrize("name", CORPORA)
def test_corpus_passes_check(name, capsys, request):
    corpus = request.getfixturevalue(name)
    files = sorted(str(p) for p in corpus.dir.iterdir())
    start = time.perf_counter()
    rc = main(["check", *files])
    elapsed = time.perf_counter() - start
    err = capsys.readouterr().err.splitlines()
    errors = [line for line in err if ": error " in line]
    warnings = [line for line in err if ": warning " in line]
    assert rc == 0, err
    assert errors == []
    assert len(warnings) <= 5
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------

@pytest.mark.acceptance(2)
def test_bank_events_are_e1_to_e14(bank):
    assert sorted(bank.layer.ids) == sorted(f"E{i}" for i in range(1, 15))
    assert coverage_lint(bank.layer, bank.model) == []


@pytest.mark.acceptance(2)
def test_flower_events_include_refinements(flower):
    expected = {f"E{i}" for i in range(1, 23)} | {f"E3{c}" for c in "abcdef"}
    assert set(flower.layer.ids) == expected
    assert len(flower.layer.ids) == len(expected)
    assert all(flower.layer.get(f"E3{c}").refines == "E3" for c in "abcdef")
    assert coverage_lint(flower.layer, flower.model) == []


# 3 ---------------------------------------------------------------------------

def signed_sum(stimuli) -> Decimal:
    """Independent oracle: deposits add, withdrawals and transfers subtract."""
    sign = {"deposit": 1, "withdraw": -1, "transfer": -1}
    total = D("0.00")
    for s in stimuli:
        total += sign[s.fields["type"]] * s.fields["amount"]
    return total


@pytest.mark.acceptance(3)
def test_bank_scenario_replay(bank):
    scenario = bank.scenario("s1")
    monitor = bank.monitor("monitors")
    assert bank.model.initial_stores()[ref("Bank.Account.value")] == D("0.00")
    trace = run(bank.model, bank.layer, bank.graph, scenario, EngineOptions(monitor=monitor))
    assert trace.events == ["E5", "E13", "E14", "E5", "E10", "E11", "E12",
                            "E5", "E6", "E7", "E8", "E9"]
    final = trace.final_stores[ref("Bank.Account.value")]
    assert final == D("50.00") == signed_sum(scenario.stimuli)
    balance = trace.records.history("A1.balance")
    assert [(r.valid_start, r.payload["balance"]) for r in balance] == [
        (D("0.00"), D("100.00")), (D("5.00"), D("70.00")), (D("9.00"), D("50.00"))]


# 4 ---------------------------------------------------------------------------

def _sim_args(corpus, scenario: str, out, trace, monitor: str = "monitors"):
    return ["sim", "--model", str(corpus.path(".tm")), "--events", str(corpus.path(".tme")),
            "--behavior", str(corpus.path(".tmb")),
            "--scenario", str(corpus.dir / f"{scenario}.tms"),
            "--monitor", str(corpus.dir / f"{monitor}.tmm"),
            "--out", str(out), "--trace", str(trace)]


@pytest.mark.acceptance(4)
def test_balance_records_match_golden_file(bank, tmp_path):
    out = tmp_path / "records.tdb"
    assert main(_sim_args(bank, "s1", out, tmp_path / "trace.out")) == 0
    assert out.read_bytes() == (GOLDEN / "s1_records.tdb").read_bytes()


@pytest.mark.acceptance(4)
def test_balance_record_field_set(bank):
    trace = run(bank.model, bank.layer, bank.graph, bank.scenario("s1"),
                EngineOptions(monitor=bank.monitor("monitors")))
    for r in trace.records.history("A1.balance"):
        row = r.to_row()
        assert list(row) == ["txn", "key", "event", "valid_start", "valid_end", "duration",
                             "payload"]
        assert set(row["payload"]) == {"account", "balance"}
        assert row["duration"] == row["valid_end"] - row["valid_start"]


# 5 ---------------------------------------------------------------------------

def random_scenario(rng: random.Random, target) -> Scenario:
    stimuli = []
    for _ in range(rng.randint(0, 8)):
        stimuli.append(Stimulus(
            at=fixed(f"{rng.randint(0, 40)}.{rng.choice(['00', '50', '25'])}"),
            target=target,
            fields={"type": rng.choice(["deposit", "withdraw", "transfer"]),
                    "amount": fixed(f"{rng.randint(0, 500)}.{rng.randint(0, 99):02d}"),
                    "account": rng.choice(["A1", "A2", "B7"])},
            urgency=None, pos=None))
    return Scenario("Random", "Bank", tuple(stimuli))


def oracle_as_of(records, key, t):
    best = None
    for r in records:
        if r.key == key and r.valid_start <= t:
            if best is None or (r.valid_start, r.txn_seq) >= (best.valid_start, best.txn_seq):
                best = r
    return best


def oracle_history(records, key):
    return [r for r in records if r.key == key]


def oracle_as_known_at(records, key, txn):
    return [r for r in records if r.key == key and r.txn_seq <= txn]


@pytest.mark.acceptance(5)
def test_temporal_queries_match_linear_scan(bank):
    rng = random.Random(20261018)
    monitor = bank.monitor("monitors")
    target = ref("Bank.System.transaction_in")
    value_ref = ref("Bank.Account.value")
    start = time.perf_counter()
    n_queries = 0
    for _ in range(1000):
        scenario = random_scenario(rng, target)
        trace = run(bank.model, bank.layer, bank.graph, scenario, EngineOptions(monitor=monitor))
        store = trace.records
        records = list(store.records)
        assert trace.final_stores[value_ref] == signed_sum(scenario.stimuli)
        keys = sorted({r.key for r in records}) + ["missing.balance"]
        probes = [D(v) for v in ("0.00", "0.25", "5.00", "17.50", "40.50", "99.00")]
        probes += [r.valid_start for r in records]
        for key in keys:
            assert store.history(key) == oracle_history(records, key)
            for t in probes:
                assert store.as_of(key, t) == oracle_as_of(records, key, t)
                n_queries += 1
            for txn in range(-1, len(records) + 1):
                assert store.as_known_at(key, txn) == oracle_as_known_at(records, key, txn)
    assert n_queries > 1000
    assert time.perf_counter() - start < 30.0


# 6 ---------------------------------------------------------------------------

@pytest.mark.acceptance(6)
def test_reruns_are_byte_identical(bank, tmp_path):
    outputs = []
    for i in range(2):
        d = tmp_path / str(i)
        d.mkdir()
        assert main(_sim_args(bank, "s1", d / "records.tdb", d / "trace.out")) == 0
        outputs.append(((d / "trace.out").read_bytes(), (d / "records.tdb").read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][0] and outputs[0][1]


# 7 ---------------------------------------------------------------------------

def _first(trace, event_id):
    return next(o for o in trace.occurrences if o.event == event_id)


@pytest.mark.acceptance(7)
def test_no_bids_times_out_and_alerts(flower):
    trace = run(flower.model, flower.layer, flower.graph, flower.scenario("no_bids"))
    e6, e8 = _first(trace, "E6"), _first(trace, "E8")
    assert e8.valid_start == e6.valid_end + D("120.00")
    assert e8.cause.kind == "occurrence" and e8.cause.index == e6.seq
    assert "E11" in trace.events
    assert "E12" not in trace.events


@pytest.mark.acceptance(7)
def test_one_bid_reaches_selection(flower):
    trace = run(flower.model, flower.layer, flower.graph, flower.scenario("one_bid"))
    bid = next(s for s in flower.scenario("one_bid").stimuli if "driver" in s.fields)
    assert bid.at < _first(trace, "E8").valid_start
    assert {"E12", "E13", "E14"} <= set(trace.events)
    assert "E10" not in trace.events
    assert "E11" not in trace.events


# 8 ---------------------------------------------------------------------------

@pytest.mark.acceptance(8)
@pytest.mark.parametrize("name", CORPORA)
def test_monitor_all_records_every_occurrence(name, request):
    corpus = request.getfixturevalue(name)
    assert corpus.scenario_names
    for sname in corpus.scenario_names:
        trace = run(corpus.model, corpus.layer, corpus.graph, corpus.scenario(sname),
                    EngineOptions(monitor=MONITOR_ALL))
        assert len(trace.records.records) == len(trace.occurrences) > 0
        assert [r.key for r in trace.records.records] == trace.events


@pytest.mark.acceptance(8)
def test_monitor_all_flag_on_cli(flower, tmp_path):
    out = tmp_path / "all.tdb"
    args = _sim_args(flower, "one_bid", out, tmp_path / "trace.out", monitor="all")
    args[args.index("--monitor"):args.index("--monitor") + 2] = ["--monitor-all"]
    assert main(args) == 0
    assert len(out.read_text().splitlines()) == len((tmp_path / "trace.out").read_text().splitlines())


# 9 ---------------------------------------------------------------------------

def balanced(text: str) -> bool:
    depth, in_string, escaped = 0, False, False
    for ch in text:
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0 and not in_string


def dot_parts(text: str):
    """Nodes, edges and clusters of a DOT text, collected through pydot."""
    graphs = pydot.graph_from_dot_data(text)
    assert graphs is not None and len(graphs) == 1
    nodes, edges, clusters = [], [], []

    def walk(g):
        nodes.extend(n for n in g.get_nodes() if n.get_name() not in ("node", "edge", "graph"))
        edges.extend(g.get_edges())
        for sub in g.get_subgraphs():
            clusters.append(sub)
            walk(sub)

    walk(graphs[0])
    return nodes, edges, clusters


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("name", CORPORA)
def test_static_dot_counts(name, request):
    c = request.getfixturevalue(name)
    text = dot_static(c.model)
    assert balanced(text)
    nodes, edges, clusters = dot_parts(text)
    g = c.model.graph
    assert len(nodes) == len(c.model.stages()) + len(c.model.stores())
    assert len(clusters) == len(c.model.thimacs())
    dashed = [e for e in edges if e.get("style") == "dashed"]
    solid = [e for e in edges if e.get("style") is None]
    assert len(dashed) == len(c.model.triggers) == len(g.trigger_arcs())
    assert len(solid) == len(g.flow_arcs()) + len(g.store_writes)
    declared = {n.get_name() for n in nodes}
    assert all(e.get_source() in declared and e.get_destination() in declared for e in edges)


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("name", CORPORA)
def test_event_and_behavior_dot_counts(name, request):
    c = request.getfixturevalue(name)
    text = dot_events(c.model, c.layer)
    assert balanced(text)
    nodes, _, _ = dot_parts(text)
    filled = [n for n in nodes if n.get("fillcolor") is not None]
    assert len(filled) == len(set().union(*(e.region for e in c.layer.events)))
    text = dot_behavior(c.graph)
    assert balanced(text)
    nodes, edges, _ = dot_parts(text)
    assert len(nodes) == len(c.graph.event_ids)
    assert len(edges) == len(c.graph.edges)


@pytest.mark.acceptance(9)
def test_bank_dot_examples(bank):
    nodes, _, _ = dot_parts(dot_events(bank.model, bank.layer, "E14"))
    filled = sorted(n.get_name().strip('"') for n in nodes if n.get("fillcolor") is not None)
    assert filled == ["Bank.Deposit.acct", "Bank.Deposit.create_new", "Bank.Deposit.mix"]
    nodes, edges, _ = dot_parts(dot_behavior(bank.graph))
    assert len(nodes) == 14
    guarded = [e for e in edges if e.get_source() == '"E5"'
               and (e.get("label") or "").startswith('"when ')]
    assert len(guarded) == 3


@pytest.mark.acceptance(9)
def test_flower_timed_edge_label(flower):
    _, edges, _ = dot_parts(dot_behavior(flower.graph))
    timed = [e for e in edges if e.get("label") == '"after 120s"']
    assert [(e.get_source(), e.get_destination()) for e in timed] == [('"E6"', '"E8"')]


# 10 --------------------------------------------------------------------------

BASE_MODEL = """model M {
  thimac A {
    store s: number = 0
    create c
    release r
    transfer t
  }
  thimac B {
    receive i
    process p
  }
  flow A.c -> A.r
  flow A.r -> A.t
  flow A.t -> B.i
  flow B.i -> B.p
  EXTRA
}
"""
BASE_EVENTS = """events for M {
  event E1 over { A.c, A.r, A.t }
  event E2 over { B.i, B.p }
  EXTRA
}
"""
BASE_BEHAVIOR = """behavior for M {
  start E1 on A.t
  EXTRA
}
"""


def _model(extra=""):
    return BASE_MODEL.replace("EXTRA", extra)


def _diagnostics(kind: str, text: str):
    """All diagnostics for one malformed input, whether raised or returned."""
    try:
        if kind == "model":
            m = parse_model(text, "bad.tm")
            return validate_static(m)
        model = parse_model(_model(), "ok.tm")
        if kind == "events":
            layer = parse_events(text, model, "bad.tme")
            return validate_events(layer, model)
        layer = parse_events(BASE_EVENTS.replace("EXTRA", ""), model, "ok.tme")
        if kind == "behavior":
            graph = parse_behavior(text, layer, "bad.tmb", model=model)
            return validate_behavior(graph, layer, model)
        parse_scenario(text, model, "bad.tms")
        return []
    except ParseError as e:
        return e.diagnostics


NEGATIVE = [
    ("illegal flow kinds", "model", _model("flow A.c -> A.t"), "E050"),
    ("receive flows back to release", "model", _model("flow B.p -> B.i"), "E050"),
    ("intra-machine trigger", "model", _model("trigger B.i ~> B.p"), "E051"),
    ("store written by receive", "model", _model("flow B.i -> A.s"), "E052"),
    ("lexical error", "model", _model("flow A.c -> A.r @"), "E001"),
    ("syntax error", "model", "model M { thimac { } }", "E002"),
    ("duplicate stage", "model", _model().replace("process p", "process p\n    process p"),
     "E010"),
    ("unresolved flow end", "model", _model("flow A.c -> A.nowhere"), "E011"),
    ("empty region", "events", BASE_EVENTS.replace("EXTRA", "event E3 over { }"), "E022"),
    ("region outside the model", "events", BASE_EVENTS.replace("EXTRA", "event E3 over { A.q }"),
     "E021"),
    ("refinement cycle", "events", BASE_EVENTS.replace(
        "EXTRA", "event E3 refines E4 over { A.c }\n  event E4 refines E3 over { A.r }"), "E062"),
    ("unknown behavior node", "behavior", BASE_BEHAVIOR.replace("EXTRA", "E1 -> E9"), "E030"),
    ("zero timer", "behavior", BASE_BEHAVIOR.replace("EXTRA", "E1 -> E2 after 0"), "E031"),
    ("negative timer", "behavior", BASE_BEHAVIOR.replace("EXTRA", "E1 -> E2 after -5"), "E031"),
    ("start on a non-transfer stage", "behavior", "behavior for M {\n  start E1 on A.c\n}",
     "E033"),
    ("inject into a non-transfer stage", "scenario",
     "scenario S for M {\n  at 0: inject B.p { }\n}", "E040"),
]


@pytest.mark.acceptance(10)
@pytest.mark.parametrize("label,kind,text,code", NEGATIVE, ids=[n[0] for n in NEGATIVE])
def test_malformed_input_reports_code_and_position(label, kind, text, code):
    diags = _diagnostics(kind, text)
    hits = [d for d in diags if d.code == code]
    assert hits, f"{label}: expected {code}, got {[d.code for d in diags]}"
    for d in hits:
        assert d.is_error
        assert d.pos is not None and d.pos.line >= 1 and d.pos.column >= 1


@pytest.mark.acceptance(10)
def test_negative_suite_is_large_enough():
    assert len(NEGATIVE) >= 10
    assert {"E050", "E051", "E022", "E062", "E030", "E031"} <= {n[3] for n in NEGATIVE}
