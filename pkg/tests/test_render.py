from decimal import Decimal

import pydot
from hypothesis import given, strategies as st

from tmkit.core import BinOp, FieldRef, NumberLit, TextLit, ref
from tmkit.dsl import parse_model
from tmkit.render import dot_events, dot_static, format_expr
from tmkit.render.dot import event_sort_key, q, seconds


def _all_nodes(g):
    out = list(g.get_nodes())
    for s in g.get_subgraphs():
        out.extend(_all_nodes(s))
    return out


def _cluster(g, name):
    for s in g.get_subgraphs():
        if s.get_name() == f'"cluster_{name}"':
            return s
        found = _cluster(s, name)
        if found is not None:
            return found
    return None


def test_empty_model_has_no_nodes():
    (g,) = pydot.graph_from_dot_data(dot_static(parse_model("model M { }")))
    assert g.get_nodes() == [] and g.get_subgraphs() == []


def test_deposit_cluster_lists_stages_in_order(bank):
    (g,) = pydot.graph_from_dot_data(dot_static(bank.model))
    dep = _cluster(g, "Bank.Deposit")
    assert _cluster(g, "Bank").get_subgraphs()  # nested, not flat
    labels = [n.get("label") for n in dep.get_nodes()]
    assert labels == ['"receive\\namount"', '"receive\\nacct"', '"process\\nmix"',
                      '"create\\ncreate_new"']


def test_stores_are_cylinders(bank):
    (g,) = pydot.graph_from_dot_data(dot_static(bank.model))
    cylinders = {n.get_name().strip('"') for n in _all_nodes(g) if n.get("shape") == "cylinder"}
    assert cylinders == {str(r) for r, _ in bank.model.stores()}


def test_event_colors_are_deterministic(bank):
    assert dot_events(bank.model, bank.layer) == dot_events(bank.model, bank.layer)
    assert dot_events(bank.model, bank.layer, "all") == dot_events(bank.model, bank.layer)


def test_helpers():
    assert sorted(["E10", "E3a", "E2", "E3"], key=event_sort_key) == ["E2", "E3", "E3a", "E10"]
    assert seconds(Decimal("120.00")) == "120" and seconds(Decimal("0.50")) == "0.5"
    assert q('a"b\nc') == '"a\\"b\\nc"'


# expressions print with just enough parentheses to reparse identically

leaves = st.one_of(
    st.integers(-10**6, 10**6).map(lambda n: NumberLit(Decimal(n).scaleb(-2))),
    st.sampled_from(["a", "b"]).map(FieldRef),
    st.text(alphabet="xy \"\\", max_size=3).map(TextLit))
exprs = st.recursive(leaves, lambda sub: st.builds(
    BinOp, st.sampled_from(["+", "-", "==", "!=", "<", ">=", "and", "or"]), sub, sub),
    max_leaves=8)


@given(exprs)
def test_expr_print_reparse(expr):
    m = parse_model(f"model M {{ thimac A {{ process p = {format_expr(expr)} }} }}")
    assert m.stage(ref("A.p")).assignment.expr == expr
