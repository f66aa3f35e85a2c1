"""Recursive-descent parsers for the five source kinds.

Syntax errors stop the parse at the first offending token.  Semantic
errors (duplicates, unresolved or mis-kinded references) are collected so
one run reports all of them.  Either a value is returned or ParseError is
raised, never both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable

from ..core import (Assignment, BinOp, COMPUTING_KINDS, Expr, FieldRef, Flow, NumberLit,
                    QualifiedRef, Stage, StageKind, StaticModel, Store, StoreRef, TextLit,
                    Thimac, Trigger, fixed, store_refs)
from ..diagnostics import Diagnostic, ParseError, SourcePos, error
from ..dynamics import BehaviorEdge, BehaviorGraph, Capture, Event, EventLayer, Start
from ..engine import Scenario, Stimulus
from ..temporal import MonitorSpec, Selection
from .lexer import LexError, Token, tokenize

STAGE_KINDS = {k.value: k for k in StageKind}
RESERVED = frozenset({"and", "or"})
COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")


class _Abort(Exception):
    pass


@dataclass
class _RawThimac:
    name: str
    pos: SourcePos
    stages: list = field(default_factory=list)    # (name, kind, expr|None, into|None, label, pos, into_pos)
    stores: list = field(default_factory=list)    # Store
    children: list = field(default_factory=list)  # _RawThimac


class _Parser:
    def __init__(self, text: str, filename: str):
        self.errors: list[Diagnostic] = []
        try:
            self.toks = tokenize(text, filename)
        except LexError as e:
            raise ParseError([e.diagnostic]) from None
        self.i = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def is_punct(self, value: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.value == value

    def is_kw(self, word: str) -> bool:
        return self.tok.kind == "IDENT" and self.tok.value == word

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        self.errors.append(error("E002", message, tok.pos))
        raise _Abort

    def expect_punct(self, value: str) -> Token:
        if not self.is_punct(value):
            self.fail(f"expected '{value}', found {self.tok}")
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            self.fail(f"expected '{word}', found {self.tok}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT" or self.tok.value in RESERVED:
            self.fail(f"expected {what}, found {self.tok}")
        return self.advance()

    def string(self) -> Token:
        if self.tok.kind != "STRING":
            self.fail(f"expected string, found {self.tok}")
        return self.advance()

    def skip_comma(self):
        if self.is_punct(","):
            self.advance()

    def expect_eof(self):
        if self.tok.kind != "EOF":
            self.fail(f"unexpected {self.tok} after end of declaration")

    def signed_number(self) -> tuple[Decimal, SourcePos]:
        pos = self.tok.pos
        negative = False
        if self.is_punct("-"):
            self.advance()
            negative = True
        if self.tok.kind != "NUMBER":
            self.fail(f"expected number, found {self.tok}")
        tok = self.advance()
        try:
            value = fixed(tok.value)
        except ValueError:
            self.errors.append(error("E001", f"number {tok.value} is out of range", tok.pos))
            raise _Abort from None
        return (-value if negative and value else value), pos

    def literal(self):
        if self.tok.kind == "STRING":
            return self.advance().value
        if self.tok.kind == "NUMBER" or self.is_punct("-"):
            return self.signed_number()[0]
        self.fail(f"expected number or string, found {self.tok}")

    def ref(self) -> tuple[QualifiedRef, SourcePos]:
        first = self.ident("reference")
        parts = [first.value]
        while self.is_punct("."):
            self.advance()
            parts.append(self.ident("reference segment").value)
        return QualifiedRef(tuple(parts)), first.pos

    # -- expressions -------------------------------------------------------

    def expr(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        left = self._and()
        while self.is_kw("or"):
            op = self.advance()
            left = BinOp("or", left, self._and(), op.pos)
        return left

    def _and(self) -> Expr:
        left = self._cmp()
        while self.is_kw("and"):
            op = self.advance()
            left = BinOp("and", left, self._cmp(), op.pos)
        return left

    def _cmp(self) -> Expr:
        left = self._add()
        while self.tok.kind == "PUNCT" and self.tok.value in COMPARISONS:
            op = self.advance()
            left = BinOp(op.value, left, self._add(), op.pos)
        return left

    def _add(self) -> Expr:
        left = self._primary()
        while self.is_punct("+") or self.is_punct("-"):
            op = self.advance()
            left = BinOp(op.value, left, self._primary(), op.pos)
        return left

    def _primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "NUMBER" or self.is_punct("-"):
            value, pos = self.signed_number()
            return NumberLit(value, pos)
        if tok.kind == "STRING":
            self.advance()
            return TextLit(tok.value, tok.pos)
        if self.is_punct("$"):
            self.advance()
            name = self.ident("field name")
            return FieldRef(name.value, tok.pos)
        if self.is_punct("("):
            self.advance()
            inner = self.expr()
            self.expect_punct(")")
            return inner
        if tok.kind == "IDENT" and tok.value not in RESERVED:
            r, pos = self.ref()
            return StoreRef(r, pos)
        self.fail(f"expected expression, found {tok}")

    # -- helpers -----------------------------------------------------------

    def semantic(self, code: str, message: str, pos: SourcePos):
        self.errors.append(error(code, message, pos))

    def finish(self, build: Callable):
        if self.errors:
            raise ParseError(self.errors)
        value = build()
        if self.errors:
            raise ParseError(self.errors)
        return value

    def check_for(self, name_tok: Token, expected: str | None, what: str):
        if expected is not None and name_tok.value != expected:
            self.semantic("E003", f"{what} is for {name_tok.value!r}, "
                                  f"but the loaded model is {expected!r}", name_tok.pos)


def _map_store_refs(expr: Expr, fn: Callable[[StoreRef], StoreRef]) -> Expr:
    if isinstance(expr, StoreRef):
        return fn(expr)
    if isinstance(expr, BinOp):
        return BinOp(expr.op, _map_store_refs(expr.left, fn),
                     _map_store_refs(expr.right, fn), expr.pos)
    return expr


def _run(parser: _Parser, body: Callable):
    try:
        return body()
    except _Abort:
        raise ParseError(parser.errors) from None


def _check_resolves(p: _Parser, model: StaticModel, r: QualifiedRef, pos: SourcePos,
                    kinds: tuple[str, ...], missing: str, wrong: str, what: str) -> bool:
    res = model.index.get(r)
    if res is None:
        p.semantic(missing, f"{what} {r} does not exist", pos)
        return False
    if res.kind not in kinds:
        p.semantic(wrong, f"{what} {r} is a {res.kind}, expected {' or '.join(kinds)}", pos)
        return False
    return True


# ---------------------------------------------------------------------------
# model


def parse_model(text: str, filename: str = "<model>") -> StaticModel:
    p = _Parser(text, filename)

    def thimac() -> _RawThimac:
        p.expect_kw("thimac")
        name = p.ident("thimac name")
        raw = _RawThimac(name.value, name.pos)
        p.expect_punct("{")
        while not p.is_punct("}"):
            tok = p.tok
            if p.is_kw("thimac"):
                raw.children.append(thimac())
            elif p.is_kw("store"):
                p.advance()
                sname = p.ident("store name")
                p.expect_punct(":")
                if not (p.is_kw("number") or p.is_kw("text")):
                    p.fail(f"expected 'number' or 'text', found {p.tok}")
                kind = p.advance().value
                p.expect_punct("=")
                lit_tok = p.tok
                value = p.literal()
                if (kind == "number") != isinstance(value, Decimal):
                    p.fail(f"initial value of {kind} store must be a {kind}", lit_tok)
                raw.stores.append(Store(sname.value, kind, value, sname.pos))
            elif tok.kind == "IDENT" and tok.value in STAGE_KINDS:
                p.advance()
                sname = p.ident("stage name")
                expr = into = into_pos = label = None
                if p.is_punct("="):
                    p.advance()
                    expr = p.expr()
                    if p.is_kw("into"):
                        p.advance()
                        into, into_pos = p.ref()
                if p.tok.kind == "STRING":
                    label = p.advance().value
                raw.stages.append((sname.value, STAGE_KINDS[tok.value], expr, into, label,
                                   sname.pos, into_pos))
            else:
                p.fail(f"expected thimac, store or stage declaration, found {tok}")
        p.expect_punct("}")
        return raw

    def body():
        head = p.expect_kw("model")
        name = p.ident("model name")
        p.expect_punct("{")
        roots, flows, triggers = [], [], []
        while not p.is_punct("}"):
            if p.is_kw("thimac"):
                roots.append(thimac())
            elif p.is_kw("flow"):
                kw = p.advance()
                src, spos = p.ref()
                p.expect_punct("->")
                dst, dpos = p.ref()
                flows.append((src, spos, dst, dpos, kw.pos))
            elif p.is_kw("trigger"):
                kw = p.advance()
                src, spos = p.ref()
                p.expect_punct("~>")
                dst, dpos = p.ref()
                triggers.append((src, spos, dst, dpos, kw.pos))
            else:
                p.fail(f"expected thimac, flow or trigger, found {p.tok}")
        p.expect_punct("}")
        p.expect_eof()
        return p.finish(lambda: _build_model(p, name.value, head.pos, roots, flows, triggers))

    return _run(p, body)


def _build_model(p: _Parser, name: str, pos: SourcePos, roots, flows, triggers) -> StaticModel:
    # pass 1: index every path, reporting duplicates
    kinds: dict[QualifiedRef, str] = {}

    def index(raw: _RawThimac, path: QualifiedRef):
        seen: dict[str, SourcePos] = {}
        entries = ([(c.name, c.pos) for c in raw.children]
                   + [(s[0], s[5]) for s in raw.stages]
                   + [(s.name, s.pos) for s in raw.stores])
        for n, npos in sorted(entries, key=lambda e: (e[1].line, e[1].column)):
            if n in seen:
                p.semantic("E010", f"duplicate name {n!r} in {path} "
                                   f"(first declared at {seen[n].line}:{seen[n].column})", npos)
            else:
                seen[n] = npos
        for s in raw.stores:
            kinds.setdefault(path.child(s.name), "store")
        for s in raw.stages:
            kinds.setdefault(path.child(s[0]), "stage")
        for c in raw.children:
            kinds.setdefault(path.child(c.name), "thimac")
            index(c, path.child(c.name))

    root_seen: dict[str, SourcePos] = {}
    for r in roots:
        if r.name in root_seen:
            p.semantic("E010", f"duplicate root thimac {r.name!r}", r.pos)
            continue
        root_seen[r.name] = r.pos
        kinds[QualifiedRef((r.name,))] = "thimac"
        index(r, QualifiedRef((r.name,)))
    if p.errors:
        return None

    def lookup(r: QualifiedRef, scope: QualifiedRef | None) -> QualifiedRef | None:
        # innermost enclosing thimac first, then outward to the roots
        prefixes = [] if scope is None else [scope.segments[:k]
                                             for k in range(len(scope.segments), 0, -1)]
        for pre in prefixes + [()]:
            cand = QualifiedRef(pre + r.segments)
            if cand in kinds:
                return cand
        return None

    def want(r, rpos, scope, allowed, what):
        found = lookup(r, scope)
        if found is None:
            p.semantic("E011", f"unresolved reference {r} in {what}", rpos)
            return None
        if kinds[found] not in allowed:
            p.semantic("E013", f"{what} {found} is a {kinds[found]}, "
                               f"expected {' or '.join(allowed)}", rpos)
            return None
        return found

    # pass 2: build with resolved refs
    def build(raw: _RawThimac, path: QualifiedRef) -> Thimac:
        stages = []
        for sname, kind, expr, into, label, spos, into_pos in raw.stages:
            assignment = None
            if expr is not None:
                if kind not in COMPUTING_KINDS:
                    p.semantic("E012", f"{kind} stage {sname} cannot carry an assignment "
                                       "(only create and process compute)", spos)

                def fix(sr: StoreRef, _path=path) -> StoreRef:
                    found = want(sr.ref, sr.pos, _path, ("store",), "expression reference")
                    return StoreRef(found or sr.ref, sr.pos)

                expr = _map_store_refs(expr, fix)
                target = None
                if into is not None:
                    target = want(into, into_pos, path, ("store",), "'into' target")
                assignment = Assignment(expr, target)
            stages.append(Stage(sname, kind, assignment, label, spos))
        return Thimac(raw.name, tuple(build(c, path.child(c.name)) for c in raw.children),
                      tuple(stages), tuple(raw.stores), raw.pos)

    built_roots = tuple(build(r, QualifiedRef((r.name,))) for r in roots)
    built_flows = []
    for src, spos, dst, dpos, fpos in flows:
        a = want(src, spos, None, ("stage",), "flow source")
        b = want(dst, dpos, None, ("stage", "store"), "flow target")
        if a and b:
            built_flows.append(Flow(a, b, fpos))
    built_triggers = []
    for src, spos, dst, dpos, tpos in triggers:
        a = want(src, spos, None, ("stage",), "trigger source")
        b = want(dst, dpos, None, ("stage",), "trigger target")
        if a and b:
            built_triggers.append(Trigger(a, b, tpos))
    return StaticModel(name, built_roots, tuple(built_flows), tuple(built_triggers), pos)


# ---------------------------------------------------------------------------
# events


def parse_events(text: str, model: StaticModel, filename: str = "<events>") -> EventLayer:
    p = _Parser(text, filename)

    def body():
        head = p.expect_kw("events")
        p.expect_kw("for")
        name = p.ident("model name")
        p.check_for(name, model.name, "event layer")
        p.expect_punct("{")
        raw = []
        while not p.is_punct("}"):
            p.expect_kw("event")
            eid = p.ident("event id")
            parent = None
            if p.is_kw("refines"):
                p.advance()
                parent = p.ident("event id")
            p.expect_kw("over")
            open_brace = p.expect_punct("{")
            region = []
            if not p.is_punct("}"):
                region.append(p.ref())
                while p.is_punct(","):
                    p.advance()
                    region.append(p.ref())
            p.expect_punct("}")
            lasts = None
            if p.is_kw("lasts"):
                p.advance()
                lasts = p.signed_number()
            captures = []
            if p.is_kw("payload"):
                p.advance()
                p.expect_punct("{")
                while not p.is_punct("}"):
                    cname = p.ident("payload name")
                    p.expect_punct(":")
                    if p.is_punct("$"):
                        dollar = p.advance()
                        src = FieldRef(p.ident("field name").value, dollar.pos)
                    else:
                        r, rpos = p.ref()
                        src = StoreRef(r, rpos)
                    captures.append((cname, src))
                    p.skip_comma()
                p.expect_punct("}")
            raw.append((eid, parent, open_brace.pos, region, lasts, captures))
        p.expect_punct("}")
        p.expect_eof()
        return p.finish(lambda: _build_events(p, model, name.value, head.pos, raw))

    return _run(p, body)


def _build_events(p: _Parser, model: StaticModel, name: str, pos: SourcePos, raw) -> EventLayer:
    ids: dict[str, SourcePos] = {}
    for eid, *_ in raw:
        if eid.value in ids:
            p.semantic("E010", f"duplicate event {eid.value}", eid.pos)
        else:
            ids[eid.value] = eid.pos
    events = []
    for eid, parent, rpos, region, lasts, captures in raw:
        if parent is not None and parent.value not in ids:
            p.semantic("E020", f"{eid.value} refines unknown event {parent.value}", parent.pos)
        if not region:
            p.semantic("E022", f"event {eid.value} has an empty region", rpos)
        refs = []
        for r, refpos in region:
            if _check_resolves(p, model, r, refpos, ("stage",), "E021", "E021",
                               "region reference"):
                if r in refs:
                    p.semantic("E010", f"{r} listed twice in region of {eid.value}", refpos)
                else:
                    refs.append(r)
        duration = Decimal("0.00")
        if lasts is not None:
            duration, lpos = lasts
            if duration < 0:
                p.semantic("E024", f"event {eid.value} has negative duration", lpos)
        caps, seen = [], set()
        for cname, src in captures:
            if cname.value in seen:
                p.semantic("E010", f"duplicate payload name {cname.value}", cname.pos)
                continue
            seen.add(cname.value)
            if isinstance(src, StoreRef):
                _check_resolves(p, model, src.ref, src.pos, ("store",), "E023", "E023",
                                "payload source")
            caps.append(Capture(cname.value, src, cname.pos))
        events.append(Event(eid.value, tuple(refs), parent.value if parent else None,
                            duration, tuple(caps), eid.pos))
    return EventLayer(name, tuple(events), pos)


# ---------------------------------------------------------------------------
# behavior


def parse_behavior(text: str, layer: EventLayer, filename: str = "<behavior>",
                   model: StaticModel | None = None) -> BehaviorGraph:
    """Parse a behavior graph over ``layer``.

    With ``model`` given, start bindings must name transfer stages and
    guard store references must resolve.
    """
    p = _Parser(text, filename)
    known = set(layer.ids)

    def check_event(tok: Token):
        if tok.value not in known:
            p.semantic("E030", f"unknown event {tok.value}", tok.pos)

    def body():
        head = p.expect_kw("behavior")
        p.expect_kw("for")
        name = p.ident("model name")
        p.check_for(name, layer.model_name, "behavior graph")
        p.expect_punct("{")
        starts, edges = [], []
        bound: set[QualifiedRef] = set()
        while not p.is_punct("}"):
            if p.is_kw("start"):
                kw = p.advance()
                eid = p.ident("event id")
                p.expect_kw("on")
                stage, spos = p.ref()
                check_event(eid)
                if stage in bound:
                    p.semantic("E010", f"{stage} already has a start binding", spos)
                bound.add(stage)
                if model is not None:
                    res = model.index.get(stage)
                    if res is None or res.kind != "stage" or res.entity.kind != StageKind.TRANSFER:
                        p.semantic("E033", f"start binding {stage} is not a transfer stage", spos)
                starts.append(Start(stage, eid.value, kw.pos))
                continue
            src = p.ident("event id")
            p.expect_punct("->")
            dst = p.ident("event id")
            check_event(src)
            check_event(dst)
            guard = delay = None
            if p.is_kw("when"):
                p.advance()
                guard = p.expr()
                if model is not None:
                    for sr in store_refs(guard):
                        _check_resolves(p, model, sr.ref, sr.pos, ("store",), "E034", "E034",
                                        "guard reference")
            elif p.is_kw("after"):
                p.advance()
                delay, dpos = p.signed_number()
                if delay <= 0:
                    p.semantic("E031", f"timed edge {src.value} -> {dst.value} needs a "
                                       "positive duration", dpos)
            edges.append(BehaviorEdge(src.value, dst.value, guard, delay, src.pos))
        p.expect_punct("}")
        p.expect_eof()
        if not starts:
            p.semantic("E032", "behavior graph has no start declaration", head.pos)
        return p.finish(lambda: BehaviorGraph(name.value, tuple(starts), tuple(edges), head.pos))

    return _run(p, body)


# ---------------------------------------------------------------------------
# scenario


def parse_scenario(text: str, model: StaticModel, filename: str = "<scenario>") -> Scenario:
    p = _Parser(text, filename)

    def body():
        head = p.expect_kw("scenario")
        sname = p.ident("scenario name")
        p.expect_kw("for")
        mname = p.ident("model name")
        p.check_for(mname, model.name, "scenario")
        p.expect_punct("{")
        stimuli = []
        while not p.is_punct("}"):
            at_kw = p.expect_kw("at")
            at, at_pos = p.signed_number()
            p.expect_punct(":")
            p.expect_kw("inject")
            target, tpos = p.ref()
            p.expect_punct("{")
            fields: dict = {}
            while not p.is_punct("}"):
                fname = p.ident("field name")
                p.expect_punct("=")
                value = p.literal()
                if fname.value in fields:
                    p.semantic("E010", f"duplicate field {fname.value}", fname.pos)
                fields[fname.value] = value
                p.skip_comma()
            p.expect_punct("}")
            urgency = None
            if p.is_kw("urgency"):
                p.advance()
                urgency = p.string().value
            if at < 0:
                p.semantic("E041", f"stimulus time {at} is negative", at_pos)
            res = model.index.get(target)
            if res is None:
                p.semantic("E011", f"unresolved inject target {target}", tpos)
            elif res.kind != "stage" or res.entity.kind != StageKind.TRANSFER:
                p.semantic("E040", f"inject target {target} is not a transfer stage", tpos)
            stimuli.append((at, target, fields, urgency, at_kw.pos))
        p.expect_punct("}")
        p.expect_eof()
        return p.finish(lambda: Scenario(
            sname.value, mname.value,
            tuple(Stimulus(at, t, f, u, pos) for at, t, f, u, pos in stimuli), head.pos))

    return _run(p, body)


# ---------------------------------------------------------------------------
# monitors


def parse_monitor(text: str, layer: EventLayer | None = None,
                  filename: str = "<monitor>") -> MonitorSpec:
    p = _Parser(text, filename)
    known = {e.id: e for e in layer.events} if layer is not None else None

    def body():
        start = p.tok
        saw_all = None
        selections = []
        while p.tok.kind != "EOF":
            kw = p.expect_kw("monitor")
            if p.is_kw("all"):
                p.advance()
                if saw_all is not None:
                    p.semantic("E092", "'monitor all' given twice", kw.pos)
                saw_all = kw.pos
                continue
            template = p.string()
            p.expect_kw("on")
            p.expect_punct("{")
            ids = [p.ident("event id")]
            while p.is_punct(","):
                p.advance()
                ids.append(p.ident("event id"))
            p.expect_punct("}")
            p.expect_kw("capture")
            p.expect_punct("{")
            caps = []
            if not p.is_punct("}"):
                caps.append(p.ident("payload name"))
                while p.is_punct(","):
                    p.advance()
                    caps.append(p.ident("payload name"))
            p.expect_punct("}")
            if known is not None:
                for t in ids:
                    if t.value not in known:
                        p.semantic("E090", f"monitor names unknown event {t.value}", t.pos)
                        continue
                    names = known[t.value].payload_names
                    for c in caps:
                        if c.value not in names:
                            p.semantic("E091", f"{t.value} payload has no {c.value!r}", c.pos)
            selections.append(Selection(template.value, tuple(t.value for t in ids),
                                        tuple(c.value for c in caps), kw.pos))
        if saw_all is None and not selections:
            p.semantic("E092", "monitor file declares nothing", start.pos)
        if saw_all is not None and selections:
            p.semantic("E092", "'monitor all' cannot be combined with selections", saw_all)
        if saw_all is not None:
            return p.finish(lambda: MonitorSpec("all", (), saw_all))
        return p.finish(lambda: MonitorSpec("selective", tuple(selections), start.pos))

    return _run(p, body)
