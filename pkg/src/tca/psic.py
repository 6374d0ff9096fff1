"""A small imperative language with temporal instructions, compiled to TCA.

::

    agent p {
      loop { after(1); work(x, 1/2); before(1); }
    }

Dates are relative to the last ``after`` (or ``advance``) executed, exactly
like the relative labeling of the graphs. Work statements between two
temporal instructions fuse into one block. ``if choice`` and
``while choice`` are nondeterministic branches.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Arc, Kind, Labeling, Node, TcaGraph, validate_graph, zeno_cycle
from .errors import ImpossibleConstraints, TcaError, ZenoCycle
from .transform import simplify

KEYWORDS = {"agent", "work", "after", "before", "advance", "if", "else", "while", "choice", "loop"}
PUNCT = {"{": "lbrace", "}": "rbrace", "(": "lparen", ")": "rparen", ",": "comma", ";": "semi"}
SKIP = "skip"


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def join(self, other):
        return Span(self.line, self.col, other.end_line, other.end_col)

    def __str__(self):
        return f"{self.line}:{self.col}"


class SourceError(TcaError):
    kind = "SourceError"

    def __init__(self, message, span):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}")


class LexError(SourceError):
    kind = "LexError"


class ParseError(SourceError):
    kind = "ParseError"

    def __init__(self, message, span, expected=()):
        self.expected = tuple(sorted(expected))
        super().__init__(message, span)


class CompileError(SourceError):
    kind = "CompileError"

    def __init__(self, message, span, cause=None):
        self.cause = cause
        super().__init__(message, span)


class EmptyLoopError(CompileError):
    """A loop whose body lets no time pass (a Zeno cycle)."""

    kind = "ZenoCycle"


def format_diagnostic(err, source, filename="<input>"):
    """``file:line:col: message`` followed by the source line and a caret span."""
    span = err.span
    lines = source.splitlines() or [""]
    text = lines[span.line - 1] if 0 < span.line <= len(lines) else ""
    width = span.end_col - span.col if span.end_line == span.line else len(text) - span.col + 1
    caret = " " * (span.col - 1) + "^" * max(1, width)
    return f"{filename}:{span.line}:{span.col}: {err.kind}: {err.message}\n{text}\n{caret}"


# -- lexer -------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    span: Span

    def __repr__(self):
        return f"{self.kind}({self.value})" if self.value is not None else self.kind


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+(?:/\d+)?(?:[.\w/]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}(),;])
    """,
    re.VERBOSE,
)


def tokenize(source):
    """Split ``source`` into tokens; the last one has kind ``eof``."""
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise LexError(f"unexpected character {source[pos]!r}", Span(line, col, line, col + 1))
        text = m.group()
        span = Span(line, col, line, col + len(text))
        kind = m.lastgroup
        if kind == "num":
            tokens.append(Token("rat", _rational(text, span), span))
        elif kind == "ident":
            tokens.append(Token("kw_" + text if text in KEYWORDS else "ident", None if text in KEYWORDS else text, span))
        elif kind == "punct":
            tokens.append(Token(PUNCT[text], None, span))
        pos = m.end()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            col += len(text)
    tokens.append(Token("eof", None, Span(line, col, line, col)))
    return tokens


def _rational(text, span):
    m = re.fullmatch(r"(\d+)(?:/(\d+))?", text)
    if not m:
        raise LexError(f"malformed rational literal {text!r} (use an integer or p/q)", span)
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise LexError("zero denominator", span)
    return Fraction(int(m.group(1)), den)


# -- syntax tree -------------------------------------------------------------------


@dataclass(frozen=True)
class Work:
    name: str
    cost: Fraction
    span: Span


@dataclass(frozen=True)
class After:
    date: Fraction
    span: Span


@dataclass(frozen=True)
class Before:
    date: Fraction
    span: Span


@dataclass(frozen=True)
class Advance:
    date: Fraction
    span: Span


@dataclass(frozen=True)
class IfChoice:
    then: tuple
    orelse: tuple
    span: Span


@dataclass(frozen=True)
class WhileChoice:
    body: tuple
    span: Span


@dataclass(frozen=True)
class Loop:
    body: tuple
    span: Span


@dataclass(frozen=True)
class Agent:
    name: str
    body: tuple
    span: Span


@dataclass(frozen=True)
class Program:
    agents: tuple


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def expect(self, *kinds):
        tok = self.tok
        if tok.kind not in kinds:
            found = "end of input" if tok.kind == "eof" else repr(tok)
            raise ParseError(f"expected {' or '.join(kinds)}, found {found}", tok.span, kinds)
        self.i += 1
        return tok

    def program(self):
        agents = [self.agent()]
        while self.tok.kind != "eof":
            agents.append(self.agent())
        return Program(tuple(agents))

    def agent(self):
        start = self.expect("kw_agent")
        name = self.expect("ident")
        self.expect("lbrace")
        body = self.block_body()
        end = self.expect("rbrace")
        return Agent(name.value, body, start.span.join(end.span))

    def block_body(self):
        stmts = [self.stmt()]
        while self.tok.kind != "rbrace":
            stmts.append(self.stmt())
        return tuple(stmts)

    def braced(self):
        self.expect("lbrace")
        body = self.block_body()
        end = self.expect("rbrace")
        return body, end

    def stmt(self):
        tok = self.expect(
            "kw_work", "kw_after", "kw_before", "kw_advance", "kw_if", "kw_while", "kw_loop"
        )
        if tok.kind == "kw_work":
            self.expect("lparen")
            name = self.expect("ident")
            self.expect("comma")
            cost = self.expect("rat")
            self.expect("rparen")
            end = self.expect("semi")
            return Work(name.value, cost.value, tok.span.join(end.span))
        if tok.kind in ("kw_after", "kw_before", "kw_advance"):
            self.expect("lparen")
            date = self.expect("rat")
            self.expect("rparen")
            end = self.expect("semi")
            cls = {"kw_after": After, "kw_before": Before, "kw_advance": Advance}[tok.kind]
            return cls(date.value, tok.span.join(end.span))
        if tok.kind == "kw_if":
            self.expect("kw_choice")
            then, _ = self.braced()
            self.expect("kw_else")
            orelse, end = self.braced()
            return IfChoice(then, orelse, tok.span.join(end.span))
        if tok.kind == "kw_while":
            self.expect("kw_choice")
            body, end = self.braced()
            return WhileChoice(body, tok.span.join(end.span))
        body, end = self.braced()
        return Loop(body, tok.span.join(end.span))


def parse(tokens):
    """Recursive-descent parse of a token list into a :class:`Program`."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(list(tokens)).program()


# -- compiler ------------------------------------------------------------------------


@dataclass
class CompiledAgent:
    name: str
    graph: TcaGraph
    spans: dict = field(default_factory=dict)


_KIND = {After: Kind.AFTER, Before: Kind.BEFORE, Advance: Kind.SYNC}


class _Builder:
    """Grows a relative graph; control flow is a list of open ends.

    An open end is ``(node id, pending works)``: the works have not yet been
    turned into an arc because the node they lead to is not known.
    """

    def __init__(self):
        self.nodes = {}
        self.arcs = []
        self.locked = set()
        self.spans = {}
        self.loop_heads = {}
        self.choice_sites = {}

    def new_node(self):
        node_id = f"n{len(self.nodes)}"
        self.nodes[node_id] = Node(node_id)
        return node_id

    def has_out(self, node_id):
        return any(a[0] == node_id for a in self.arcs)

    def connect(self, src, works, dst, span):
        if works:
            name = ";".join(w.name for w in works)
            cost = sum((w.cost for w in works), Fraction(0))
            span = works[0].span.join(works[-1].span)
        else:
            name, cost = SKIP, Fraction(0)
        self.arcs.append((src, dst, name, cost, span))

    def join(self, ends, span):
        """A single node where all ``ends`` meet; reuses a bare end when possible."""
        if len(ends) == 1:
            node_id, works = ends[0]
            if not works:
                return node_id
        target = self.new_node()
        for node_id, works in ends:
            self.connect(node_id, works, target, span)
        return target

    def free(self, node_id):
        return node_id not in self.locked and not self.has_out(node_id)

    def constrain(self, ends, stmt):
        kind, date = _KIND[type(stmt)], stmt.date
        node_id = self.join(ends, stmt.span)
        node = self.nodes[node_id]
        if self.free(node_id):
            if node.kind is Kind.PLAIN:
                self.set(node_id, kind, date, stmt.span)
                return [(node_id, [])]
            if node.kind is Kind.AFTER and kind is Kind.BEFORE and date == 0:
                self.set(node_id, Kind.SYNC, node.date, stmt.span)
                return [(node_id, [])]
            if node.kind is Kind.BEFORE and kind is Kind.AFTER and date == node.date:
                self.set(node_id, Kind.SYNC, date, stmt.span)
                return [(node_id, [])]
        fresh = self.new_node()
        self.connect(node_id, [], fresh, stmt.span)
        self.set(fresh, kind, date, stmt.span)
        return [(fresh, [])]

    def set(self, node_id, kind, date, span):
        self.nodes[node_id] = Node(node_id, kind, date)
        self.spans[node_id] = span

    def head(self, ends, span):
        """A fresh-enough node to start a loop at."""
        node_id = self.join(ends, span)
        if self.nodes[node_id].kind is Kind.PLAIN and self.free(node_id):
            return node_id
        fresh = self.new_node()
        self.connect(node_id, [], fresh, span)
        return fresh

    def body(self, stmts, ends):
        for i, stmt in enumerate(stmts):
            if not ends:
                raise CompileError("statement is unreachable after an endless loop", stmt.span)
            ends = self.stmt(stmt, ends)
        return ends

    def stmt(self, stmt, ends):
        if isinstance(stmt, Work):
            return [(n, works + [stmt]) for n, works in ends]
        if isinstance(stmt, (After, Before, Advance)):
            return self.constrain(ends, stmt)
        if isinstance(stmt, IfChoice):
            c = self.join(ends, stmt.span)
            if self.has_out(c):
                fresh = self.new_node()
                self.connect(c, [], fresh, stmt.span)
                c = fresh
            self.locked.add(c)
            self.choice_sites[c] = stmt.span
            return self.body(stmt.then, [(c, [])]) + self.body(stmt.orelse, [(c, [])])
        if isinstance(stmt, WhileChoice):
            h = self.head(ends, stmt.span)
            self.locked.add(h)
            self.choice_sites[h] = stmt.span
            self.loop_heads[h] = stmt.span
            for n, works in self.body(stmt.body, [(h, [])]):
                self.connect(n, works, h, stmt.span)
            return [(h, [])]
        if isinstance(stmt, Loop):
            h = self.head(ends, stmt.span)
            self.loop_heads[h] = stmt.span
            for n, works in self.body(stmt.body, [(h, [])]):
                self.connect(n, works, h, stmt.span)
            return []
        raise TypeError(stmt)

    def graph(self, name):
        used = set(self.nodes)
        arcs = []
        for src, dst, label, cost, span in self.arcs:
            arc_id, k = label, 1
            while arc_id in used:
                k += 1
                arc_id = f"{label}#{k}"
            used.add(arc_id)
            self.spans[arc_id] = span
            arcs.append(Arc(arc_id, src, dst, label, cost))
        return TcaGraph(tuple(self.nodes.values()), tuple(arcs), "n0", Labeling.RELATIVE, name)


def compile_agent(agent):
    """Compile one agent to a simplified relative graph."""
    b = _Builder()
    root = b.new_node()
    ends = b.body(agent.body, [(root, [])])
    if ends:
        b.join(ends, agent.span)
    graph = b.graph(agent.name)
    cycle = zeno_cycle(graph)
    if cycle:
        span = next((b.loop_heads[n] for n in cycle if n in b.loop_heads), agent.span)
        raise EmptyLoopError(
            "loop lets no time pass (add an after or advance with a positive date)",
            span,
            ZenoCycle(cycle),
        )
    try:
        graph = simplify(graph)
    except ImpossibleConstraints as exc:
        span = b.spans.get(exc.before_node) or b.spans.get(exc.after_node) or agent.span
        raise CompileError(f"ImpossibleConstraints: {exc}", span, exc) from None
    violations = validate_graph(graph)
    if violations:
        raise CompileError("invalid graph: " + "; ".join(map(str, violations)), agent.span)
    spans = {k: v for k, v in b.spans.items() if graph.has_node(k) or graph.has_arc(k)}
    for node_id, span in b.choice_sites.items():
        if graph.has_node(node_id):
            spans[node_id] = span
    return CompiledAgent(agent.name, graph, spans)


def compile_program(program):
    """One :class:`CompiledAgent` per agent, in source order."""
    if isinstance(program, str):
        program = parse(tokenize(program))
    seen = {}
    out = []
    for agent in program.agents:
        if agent.name in seen:
            raise CompileError(f"agent {agent.name!r} is declared twice", agent.span)
        seen[agent.name] = agent
        out.append(compile_agent(agent))
    return out


compile = compile_program
