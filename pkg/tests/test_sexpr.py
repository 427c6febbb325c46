from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from dwg.errors import ParseError
from dwg.sexpr import SExpr, kw, lst, parse_sexprs, print_sexpr, string, sym


def test_simple_form():
    forms = parse_sexprs('(defnode n1 (:message "hi"))')
    assert len(forms) == 1
    form = forms[0]
    assert form.is_list() and len(form.items) == 3
    assert form.items[0].is_symbol("defnode")
    assert form.items[1].is_symbol("n1")
    clause = form.items[2]
    assert clause.items[0].is_keyword("message")
    assert clause.items[1] == string("hi")


def test_comment_only_source():
    assert parse_sexprs("; comment only") == []


def test_comments_and_numbers():
    forms = parse_sexprs("(a 1 2.5 -3) ; trailing\n(:k)")
    assert forms[0].items[1].value == 1
    assert forms[0].items[2].value == 2.5
    assert forms[0].items[3].value == -3


def test_unclosed_list_reports_location():
    with pytest.raises(ParseError) as exc:
        parse_sexprs("(a (b")
    assert exc.value.line == 1
    assert "unclosed" in exc.value.message


def test_unterminated_string():
    with pytest.raises(ParseError) as exc:
        parse_sexprs('(a "oops)')
    assert "unterminated" in exc.value.message


def test_unexpected_close():
    with pytest.raises(ParseError):
        parse_sexprs("a)")


def test_string_escapes_round_trip():
    src = '(m "line\\nbreak \\"quoted\\" back\\\\slash")'
    (form,) = parse_sexprs(src)
    assert form.items[1].value == 'line\nbreak "quoted" back\\slash'
    assert parse_sexprs(print_sexpr(form)) == [form]


def test_locations_attached():
    (form,) = parse_sexprs("\n  (a\n    b)")
    assert (form.line, form.col) == (2, 3)
    assert (form.items[1].line, form.items[1].col) == (3, 5)


_atoms = st.one_of(
    st.from_regex(r"[a-zA-Z_$][a-zA-Z0-9_-]{0,8}", fullmatch=True).map(sym),
    st.from_regex(r"[a-z][a-z0-9-]{0,8}", fullmatch=True).map(kw),
    st.text(st.characters(blacklist_categories=("Cs",)), max_size=12).map(string),
    st.integers(-1000, 1000).map(lambda n: SExpr("number", n)),
    st.floats(allow_nan=False, allow_infinity=False, width=32).map(
        lambda f: SExpr("number", float(f))
    ),
)
_trees = st.recursive(_atoms, lambda kids: st.lists(kids, max_size=5).map(lambda xs: lst(*xs)), max_leaves=20)


@given(_trees)
def test_print_parse_round_trip(tree):
    assert parse_sexprs(print_sexpr(tree)) == [tree]
