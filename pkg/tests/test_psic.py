from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from tca.core import GraphClass, Kind, Labeling, classify, implicit_window, min_possible_deadline, validate_graph
from tca.fixtures import LOOP_WITH_CHOICE_SOURCE, PERIODIC_SOURCE, ZENO_SOURCE
from tca.psic import (
    CompileError,
    EmptyLoopError,
    IfChoice,
    LexError,
    Loop,
    ParseError,
    Span,
    compile_program,
    format_diagnostic,
    parse,
    tokenize,
)
from tca.transform import unfold


def kinds(source):
    return [t.kind for t in tokenize(source)]


def graph_of(source):
    (agent,) = compile_program(source)
    return agent.graph


def edges(g):
    return sorted((a.src, a.id, a.cost, a.dst) for a in g.arcs)


# -- lexer


def test_tokens_of_after():
    assert kinds("after(2);") == ["kw_after", "lparen", "rat", "rparen", "semi", "eof"]


def test_tokens_of_work_carry_values():
    toks = tokenize("work(a, 3/2);")
    assert kinds("work(a, 3/2);")[:-1] == ["kw_work", "lparen", "ident", "comma", "rat", "rparen", "semi"]
    assert toks[2].value == "a" and toks[4].value == F(3, 2)


@pytest.mark.parametrize("bad", ["after(2.5);", "after(1/0);", "work(x, 1); $"])
def test_lexer_rejections(bad):
    with pytest.raises(LexError) as exc:
        tokenize(bad)
    assert exc.value.span.line == 1


def test_comments_and_positions():
    toks = tokenize("// header\n  after(1); // tail\n")
    assert toks[0].kind == "kw_after" and (toks[0].span.line, toks[0].span.col) == (2, 3)


@given(st.integers(0, 10**6), st.integers(1, 10**6))
def test_rational_literals_are_exact(p, q):
    (tok, _) = tokenize(f"{p}/{q}")
    assert tok.value == F(p, q)


# -- parser


def test_loop_program_parses_to_loop_with_choice():
    prog = parse(tokenize(LOOP_WITH_CHOICE_SOURCE))
    (agent,) = prog.agents
    assert agent.name == "f7"
    loop = agent.body[1]
    assert isinstance(loop, Loop)
    assert isinstance(loop.body[1], IfChoice)


@pytest.mark.parametrize(
    "source, where",
    [
        ("agent e { }", (1, 11)),
        ("agent e { after(1);", (1, 20)),
        ("agent e { work(x); }", (1, 17)),
        ("e { after(1); }", (1, 1)),
    ],
)
def test_parse_errors_point_at_the_offending_token(source, where):
    with pytest.raises(ParseError) as exc:
        parse(tokenize(source))
    assert (exc.value.span.line, exc.value.span.col) == where


def test_duplicate_agents_are_rejected():
    with pytest.raises((ParseError, CompileError)):
        compile_program("agent a { after(1); }\nagent a { after(2); }")


# -- compiler


def test_loop_with_choice_structure():
    g = graph_of(LOOP_WITH_CHOICE_SOURCE)
    assert g.labeling is Labeling.RELATIVE
    assert classify(g) is GraphClass.AUTOMATON
    assert validate_graph(g) == []
    assert edges(g) == [
        ("n0", "a", F(1, 2), "n1"),
        ("n1", "b", F(1, 2), "n2"),
        ("n1", "c;d;e", F(3), "n3"),
        ("n2", "skip", 0, "n1"),
        ("n3", "skip#2", 0, "n1"),
    ]
    assert [(n.id, n.kind, n.date) for n in g.nodes] == [
        ("n0", Kind.PLAIN, None),
        ("n1", Kind.AFTER, 1),
        ("n2", Kind.BEFORE, 1),
        ("n3", Kind.BEFORE, 5),
    ]


def window(tree, arc):
    start, _ = implicit_window(tree, arc.id)
    return min_possible_deadline(tree, arc.id) - start


def test_loop_windows_after_unfolding():
    g = graph_of(LOOP_WITH_CHOICE_SOURCE)
    once = unfold(g, 1)
    assert {a.block: window(once, a) for a in once.arcs if a.block in ("b", "c;d;e")} == {"b": 1, "c;d;e": 5}
    many = unfold(g, 5)
    assert {window(many, a) for a in many.arcs if a.block == "b"} == {1}
    # a later iteration's after(1) counts from this one, so a following b caps c;d;e at 2
    assert min(window(many, a) for a in many.arcs if a.block == "c;d;e") == 2


def test_periodic_program_is_a_single_sync_cycle():
    g = graph_of(PERIODIC_SOURCE)
    assert [(n.kind, n.date) for n in g.nodes] == [(Kind.SYNC, 1)]
    assert edges(g) == [(g.initial, "x", F(1, 2), g.initial)]


def test_consecutive_work_fuses():
    g = graph_of("agent w { after(0); work(p, 1); work(q, 1/2); work(r, 2); before(9); }")
    assert [(a.block, a.cost) for a in g.arcs] == [("p;q;r", F(7, 2))]


def test_advance_is_a_synchronization_point():
    g = graph_of("agent w { loop { advance(3); work(x, 1); } }")
    assert [(n.kind, n.date) for n in g.nodes] == [(Kind.SYNC, 3)]


def test_while_choice_is_a_loop_with_an_exit():
    g = graph_of("agent w { after(1); while choice { work(x, 1); after(2); } work(y, 1); before(9); }")
    assert validate_graph(g) == []
    assert classify(g) is GraphClass.AUTOMATON
    assert {a.block for a in g.arcs} >= {"x", "y"}


def test_zeno_loop_is_rejected_with_its_span():
    with pytest.raises(EmptyLoopError) as exc:
        compile_program(ZENO_SOURCE)
    assert exc.value.kind == "ZenoCycle"
    assert exc.value.span == Span(1, 11, 1, 31)


def test_unreachable_code_after_endless_loop():
    with pytest.raises(CompileError) as exc:
        compile_program("agent k { loop { after(1); } work(x,1); }")
    assert exc.value.span.col == 30


def test_impossible_constraints_are_a_compile_error():
    with pytest.raises(CompileError) as exc:
        compile_program("agent m { after(3); work(x, 1); before(0); }")
    assert exc.value.span is not None


def test_diagnostic_rendering():
    source = ZENO_SOURCE
    with pytest.raises(EmptyLoopError) as exc:
        compile_program(source)
    text = format_diagnostic(exc.value, source, "z.psi")
    lines = text.splitlines()
    assert lines[0].startswith("z.psi:1:11: ZenoCycle: ")
    assert lines[1] == source.splitlines()[0]
    assert lines[2] == " " * 10 + "^" * 20


def test_spans_cover_source_elements():
    (agent,) = compile_program(LOOP_WITH_CHOICE_SOURCE)
    assert agent.spans["a"] == Span(2, 3, 2, 16)
    assert agent.spans["c;d;e"].line == 6
