"""Static thinging-machine models: thimacs, stages, stores, flows, triggers.

Every entity is addressed by a dot-joined path from a root thimac, e.g.
``Bank.Deposit.create_new``.  Models are immutable once built; the lookup
index and the stage graph are computed lazily and cached on the instance.
"""
from __future__ import annotations

import decimal
import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal
from functools import cached_property
from typing import Iterator, Mapping, Union

from .diagnostics import SourcePos, TMRuntimeError

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# ---------------------------------------------------------------------------
# fixed-point numbers

CENT = Decimal("0.01")
# Inexact is trapped so an overflowing sum raises instead of rounding.
_FIXED_CONTEXT = decimal.Context(prec=40, rounding=decimal.ROUND_HALF_EVEN,
                                 traps=[decimal.Inexact, decimal.InvalidOperation,
                                        decimal.Overflow])
FIXED_LIMIT = Decimal("1e30")


def fixed(value: Union[int, str, Decimal]) -> Decimal:
    """Coerce to an exact 2-digit fixed-point Decimal.

    Raises ValueError for floats, non-finite values, or more than two
    fractional digits (which would need rounding).
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError(f"not a fixed-point value: {value!r}")
    try:
        d = Decimal(value)
    except decimal.InvalidOperation:
        raise ValueError(f"not a number: {value!r}") from None
    if not d.is_finite():
        raise ValueError(f"not finite: {value!r}")
    if d.as_tuple().exponent < -2 and d != d.quantize(CENT, context=decimal.Context(prec=60)):
        raise ValueError(f"more than two fractional digits: {value!r}")
    if abs(d) >= FIXED_LIMIT:
        raise ValueError(f"out of range: {value!r}")
    return d.quantize(CENT, context=decimal.Context(prec=60))


def format_fixed(d: Decimal) -> str:
    return f"{d:.2f}"


def fixed_add(a: Decimal, b: Decimal) -> Decimal:
    return _FIXED_CONTEXT.add(a, b).quantize(CENT, context=_FIXED_CONTEXT)


def fixed_sub(a: Decimal, b: Decimal) -> Decimal:
    return _FIXED_CONTEXT.subtract(a, b).quantize(CENT, context=_FIXED_CONTEXT)


# ---------------------------------------------------------------------------
# references and kinds


class StageKind(str, enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"  # arrive + accept

    def __str__(self) -> str:
        return self.value


COMPUTING_KINDS = frozenset({StageKind.CREATE, StageKind.PROCESS})


@dataclass(frozen=True, order=True)
class QualifiedRef:
    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("empty reference")
        for seg in self.segments:
            if not IDENT_RE.match(seg):
                raise ValueError(f"bad identifier {seg!r} in reference")

    @classmethod
    def parse(cls, text: str) -> "QualifiedRef":
        return cls(tuple(text.split(".")))

    @property
    def parent(self) -> "QualifiedRef | None":
        return QualifiedRef(self.segments[:-1]) if len(self.segments) > 1 else None

    @property
    def name(self) -> str:
        return self.segments[-1]

    def child(self, name: str) -> "QualifiedRef":
        return QualifiedRef(self.segments + (name,))

    def __str__(self) -> str:
        return ".".join(self.segments)


def ref(text: str) -> QualifiedRef:
    return QualifiedRef.parse(text)


# ---------------------------------------------------------------------------
# expressions

ARITHMETIC_OPS = frozenset({"+", "-"})
ORDER_OPS = frozenset({"<", "<=", ">", ">="})
EQUALITY_OPS = frozenset({"==", "!="})
LOGIC_OPS = frozenset({"and", "or"})
BINARY_OPS = ARITHMETIC_OPS | ORDER_OPS | EQUALITY_OPS | LOGIC_OPS


@dataclass(frozen=True)
class NumberLit:
    value: Decimal
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TextLit:
    value: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class StoreRef:
    ref: QualifiedRef
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FieldRef:
    """``$name``: a stimulus field (in assignments) or payload field (in guards)."""
    name: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown operator {self.op!r}")


Expr = Union[NumberLit, TextLit, StoreRef, FieldRef, BinOp]
Value = Union[Decimal, str, bool]


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, BinOp):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)


def store_refs(expr: Expr) -> list[StoreRef]:
    return [e for e in walk_expr(expr) if isinstance(e, StoreRef)]


def value_kind(value: Value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, Decimal):
        return "number"
    return "text"


def eval_expr(expr: Expr, fields: Mapping[str, Value],
              stores: Mapping[QualifiedRef, Value]) -> Value:
    """Evaluate with exact fixed-point arithmetic.

    ``$name`` looks up ``fields``; store refs look up ``stores``.  Any
    missing name or kind mismatch raises TMRuntimeError R101 at the
    position of the offending node.
    """
    if isinstance(expr, NumberLit):
        return expr.value
    if isinstance(expr, TextLit):
        return expr.value
    if isinstance(expr, FieldRef):
        if expr.name not in fields:
            raise TMRuntimeError("R101", f"missing field ${expr.name}", expr.pos)
        return fields[expr.name]
    if isinstance(expr, StoreRef):
        if expr.ref not in stores:
            raise TMRuntimeError("R101", f"unknown store {expr.ref}", expr.pos)
        return stores[expr.ref]

    op = expr.op
    left = eval_expr(expr.left, fields, stores)
    # and/or short-circuit, but both sides must still be booleans when evaluated
    if op in LOGIC_OPS:
        if not isinstance(left, bool):
            raise TMRuntimeError("R101", f"'{op}' needs booleans, got {value_kind(left)}",
                                 expr.pos)
        if (op == "and" and not left) or (op == "or" and left):
            return left
        right = eval_expr(expr.right, fields, stores)
        if not isinstance(right, bool):
            raise TMRuntimeError("R101", f"'{op}' needs booleans, got {value_kind(right)}",
                                 expr.pos)
        return right

    right = eval_expr(expr.right, fields, stores)
    lk, rk = value_kind(left), value_kind(right)
    if op in EQUALITY_OPS:
        if lk != rk:
            raise TMRuntimeError("R101", f"cannot compare {lk} with {rk}", expr.pos)
        return (left == right) if op == "==" else (left != right)
    if lk != "number" or rk != "number":
        raise TMRuntimeError("R101", f"'{op}' needs numbers, got {lk} and {rk}", expr.pos)
    if op in ORDER_OPS:
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[op]
    try:
        return fixed_add(left, right) if op == "+" else fixed_sub(left, right)
    except decimal.DecimalException:
        raise TMRuntimeError("R101", "arithmetic out of range", expr.pos) from None


# ---------------------------------------------------------------------------
# static model


@dataclass(frozen=True)
class Assignment:
    expr: Expr
    into: QualifiedRef | None = None


@dataclass(frozen=True)
class Stage:
    name: str
    kind: StageKind
    assignment: Assignment | None = None
    label: str | None = None
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Store:
    name: str
    value_kind: str  # "number" | "text"
    initial: Union[Decimal, str]
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.value_kind not in ("number", "text"):
            raise ValueError(f"bad store kind {self.value_kind!r}")
        if value_kind(self.initial) != self.value_kind:
            raise ValueError(f"store {self.name}: initial value is not {self.value_kind}")


@dataclass(frozen=True)
class Thimac:
    name: str
    children: tuple["Thimac", ...] = ()
    stages: tuple[Stage, ...] = ()
    stores: tuple[Store, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Flow:
    src: QualifiedRef
    dst: QualifiedRef
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Trigger:
    src: QualifiedRef
    dst: QualifiedRef
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


class NotFound(LookupError):
    def __init__(self, path: QualifiedRef):
        self.path = path
        super().__init__(f"no thimac, stage or store at {path}")


@dataclass(frozen=True)
class Resolution:
    kind: str  # "thimac" | "stage" | "store"
    ref: QualifiedRef
    entity: Union[Thimac, Stage, Store]


@dataclass(frozen=True)
class StaticModel:
    name: str
    roots: tuple[Thimac, ...] = ()
    flows: tuple[Flow, ...] = ()
    triggers: tuple[Trigger, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @cached_property
    def index(self) -> dict[QualifiedRef, Resolution]:
        """Path -> entity, in walk order (thimac, its stores, its stages, children)."""
        out: dict[QualifiedRef, Resolution] = {}

        def put(r: Resolution):
            if r.ref in out:
                raise ValueError(f"duplicate name {r.ref}")
            out[r.ref] = r

        def visit(t: Thimac, path: QualifiedRef):
            put(Resolution("thimac", path, t))
            for s in t.stores:
                put(Resolution("store", path.child(s.name), s))
            for s in t.stages:
                put(Resolution("stage", path.child(s.name), s))
            for c in t.children:
                visit(c, path.child(c.name))

        for root in self.roots:
            visit(root, QualifiedRef((root.name,)))
        return out

    def entities(self, kind: str) -> list[tuple[QualifiedRef, object]]:
        return [(r.ref, r.entity) for r in self.index.values() if r.kind == kind]

    def stages(self) -> list[tuple[QualifiedRef, Stage]]:
        return self.entities("stage")  # type: ignore[return-value]

    def stores(self) -> list[tuple[QualifiedRef, Store]]:
        return self.entities("store")  # type: ignore[return-value]

    def thimacs(self) -> list[tuple[QualifiedRef, Thimac]]:
        return self.entities("thimac")  # type: ignore[return-value]

    def stage(self, r: QualifiedRef) -> Stage:
        res = resolve(self, r)
        if res.kind != "stage":
            raise NotFound(r)
        return res.entity  # type: ignore[return-value]

    def store(self, r: QualifiedRef) -> Store:
        res = resolve(self, r)
        if res.kind != "store":
            raise NotFound(r)
        return res.entity  # type: ignore[return-value]

    def initial_stores(self) -> dict[QualifiedRef, Value]:
        return {r: s.initial for r, s in self.stores()}

    @cached_property
    def graph(self) -> "StageGraph":
        return _build_stage_graph(self)


def resolve(model: StaticModel, path: QualifiedRef) -> Resolution:
    try:
        return model.index[path]
    except KeyError:
        raise NotFound(path) from None


def owner(path: QualifiedRef) -> QualifiedRef:
    """The thimac that owns a stage or store."""
    parent = path.parent
    assert parent is not None, path
    return parent


def path_of(model: StaticModel, entity: object) -> QualifiedRef:
    for r in model.index.values():
        if r.entity is entity:
            return r.ref
    raise LookupError("entity not part of model")


# ---------------------------------------------------------------------------
# stage graph


@dataclass(frozen=True)
class Arc:
    src: QualifiedRef
    dst: QualifiedRef
    label: str  # "flow" | "trigger"


@dataclass(frozen=True)
class StageGraph:
    nodes: tuple[QualifiedRef, ...]
    arcs: tuple[Arc, ...]
    # (stage, store) pairs from flows into stores and from `into` clauses
    store_writes: tuple[tuple[QualifiedRef, QualifiedRef], ...] = ()

    def flow_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.label == "flow"]

    def trigger_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.label == "trigger"]

    def incident(self, node: QualifiedRef) -> int:
        n = sum(1 for a in self.arcs if node in (a.src, a.dst))
        return n + sum(1 for s, _ in self.store_writes if s == node)

    def induced(self, nodes) -> "StageGraph":
        keep = set(nodes)
        return StageGraph(
            nodes=tuple(n for n in self.nodes if n in keep),
            arcs=tuple(a for a in self.arcs if a.src in keep and a.dst in keep),
            store_writes=tuple(w for w in self.store_writes if w[0] in keep),
        )

    def is_weakly_connected(self) -> bool:
        if len(self.nodes) <= 1:
            return True
        adj: dict[QualifiedRef, set[QualifiedRef]] = {n: set() for n in self.nodes}
        for a in self.arcs:
            adj[a.src].add(a.dst)
            adj[a.dst].add(a.src)
        seen = {self.nodes[0]}
        todo = [self.nodes[0]]
        while todo:
            for nxt in adj[todo.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return len(seen) == len(self.nodes)

    def topological_order(self) -> list[QualifiedRef]:
        """Kahn's algorithm; ready nodes are taken in node (declaration) order.

        Nodes left on a cycle are appended in declaration order.
        """
        rank = {n: i for i, n in enumerate(self.nodes)}
        indeg = {n: 0 for n in self.nodes}
        succ: dict[QualifiedRef, list[QualifiedRef]] = {n: [] for n in self.nodes}
        for a in self.arcs:
            succ[a.src].append(a.dst)
            indeg[a.dst] += 1
        ready = sorted((n for n in self.nodes if indeg[n] == 0), key=rank.__getitem__)
        out: list[QualifiedRef] = []
        while ready:
            n = ready.pop(0)
            out.append(n)
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    ready.append(m)
            ready.sort(key=rank.__getitem__)
        if len(out) < len(self.nodes):
            done = set(out)
            out.extend(n for n in self.nodes if n not in done)
        return out


def _build_stage_graph(model: StaticModel) -> StageGraph:
    index = model.index
    nodes = tuple(r for r, _ in model.stages())
    arcs: list[Arc] = []
    writes: list[tuple[QualifiedRef, QualifiedRef]] = []
    for f in model.flows:
        dst = index.get(f.dst)
        if dst is not None and dst.kind == "store":
            writes.append((f.src, f.dst))
        else:
            arcs.append(Arc(f.src, f.dst, "flow"))
    arcs.extend(Arc(t.src, t.dst, "trigger") for t in model.triggers)
    for r, s in model.stages():
        if s.assignment is not None and s.assignment.into is not None:
            writes.append((r, s.assignment.into))
    # a flow into a store and an `into` clause naming the same pair count once
    return StageGraph(nodes, tuple(arcs), tuple(dict.fromkeys(writes)))


def stage_graph(model: StaticModel) -> StageGraph:
    return model.graph
