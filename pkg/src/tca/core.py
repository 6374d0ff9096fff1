"""Time-constrained graphs: nodes bearing dates, blocks carried by arcs.

Dates are exact :class:`fractions.Fraction` values; the only non-rational
date is :data:`INF`, used for absent deadlines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

from .errors import NotAbsolute, NotAcyclic, UnknownElement


class _Infinity:
    """Positive infinity for deadlines; compares above every rational."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())

    def __float__(self):
        return float("inf")

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("tca.INF")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("inf - inf")
        return self


INF = _Infinity()


def as_time(value):
    """Convert ``value`` to an exact date.

    Accepts ints, Fractions, :data:`INF` and strings such as ``"3"``,
    ``"3/2"`` or ``"inf"``. Floats are refused to keep arithmetic exact.
    """
    if value is INF:
        return INF
    if isinstance(value, bool):
        raise TypeError("booleans are not dates")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if text in ("inf", "+inf"):
            return INF
        if "." in text or "e" in text.lower():
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot use {type(value).__name__} as an exact date")


def format_time(value):
    if value is INF:
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Kind(enum.Enum):
    PLAIN = "plain"
    AFTER = "after"
    BEFORE = "before"
    SYNC = "sync"


class Labeling(enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


class GraphClass(enum.Enum):
    CHAIN = "chain"
    TREE = "tree"
    AUTOMATON = "automaton"


_SYMBOLS = {Kind.PLAIN: "o", Kind.AFTER: ">", Kind.BEFORE: "<", Kind.SYNC: "<>"}


@dataclass(frozen=True)
class Node:
    id: str
    kind: Kind = Kind.PLAIN
    date: Fraction | None = None
    inherited_deadline: Fraction | None = None
    origin: str | None = None
    frontier: bool = False

    @property
    def release(self):
        """Date of the after constraint borne by this node, if any."""
        if self.kind in (Kind.AFTER, Kind.SYNC):
            return self.date
        return None

    @property
    def deadline(self):
        """Date of the before constraint borne by this node, if any."""
        if self.kind in (Kind.BEFORE, Kind.SYNC):
            return self.date
        return None

    @property
    def source(self):
        return self.origin or self.id

    def __str__(self):
        text = f"{self.id}:{_SYMBOLS[self.kind]}"
        if self.kind is not Kind.PLAIN:
            text += format_time(self.date)
        if self.inherited_deadline is not None:
            text += f"[<{format_time(self.inherited_deadline)}]"
        if self.frontier:
            text += "|cut"
        return text


def plain(id, **kw):
    return Node(id, Kind.PLAIN, None, **kw)


def after(id, date, **kw):
    return Node(id, Kind.AFTER, as_time(date), **kw)


def before(id, date, **kw):
    return Node(id, Kind.BEFORE, as_time(date), **kw)


def sync(id, date, **kw):
    return Node(id, Kind.SYNC, as_time(date), **kw)


def with_kind(node, kind, date=None):
    """Copy of ``node`` bearing a different constraint."""
    return replace(node, kind=kind, date=None if kind is Kind.PLAIN else date)


def deadline_bound(node):
    """Tightest before-style bound carried by ``node`` (INF if none).

    The inherited deadline added by choice deadline inheritance counts as
    a before constraint.
    """
    bound = INF
    if node.deadline is not None:
        bound = node.deadline
    if node.inherited_deadline is not None and node.inherited_deadline < bound:
        bound = node.inherited_deadline
    return bound


@dataclass(frozen=True)
class Arc:
    """An arc carrying a block; ``cost`` is the block's required execution time."""

    id: str
    src: str
    dst: str
    name: str = ""
    cost: Fraction = Fraction(0)
    origin: str | None = None

    @property
    def block(self):
        """Identifier of the block, stable across unfolding."""
        return self.origin or self.id

    @property
    def label(self):
        return self.name or self.block


@dataclass(frozen=True)
class TcaGraph:
    nodes: tuple
    arcs: tuple
    initial: str
    labeling: Labeling = Labeling.ABSOLUTE
    name: str = "task"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple(self.arcs))

    @cached_property
    def _node_index(self):
        return {n.id: n for n in self.nodes}

    @cached_property
    def _arc_index(self):
        return {a.id: a for a in self.arcs}

    @cached_property
    def _out(self):
        out = {n.id: [] for n in self.nodes}
        for a in self.arcs:
            out.setdefault(a.src, []).append(a)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _in(self):
        inc = {n.id: [] for n in self.nodes}
        for a in self.arcs:
            inc.setdefault(a.dst, []).append(a)
        return {k: tuple(v) for k, v in inc.items()}

    def node(self, node_id):
        try:
            return self._node_index[node_id]
        except KeyError:
            raise UnknownElement(f"no node {node_id!r} in {self.name}") from None

    def arc(self, arc_id):
        try:
            return self._arc_index[arc_id]
        except KeyError:
            raise UnknownElement(f"no arc {arc_id!r} in {self.name}") from None

    def has_node(self, node_id):
        return node_id in self._node_index

    def has_arc(self, arc_id):
        return arc_id in self._arc_index

    def out_arcs(self, node_id):
        return self._out.get(node_id, ())

    def in_arcs(self, node_id):
        return self._in.get(node_id, ())

    def is_choice(self, node_id):
        return len(self.out_arcs(node_id)) >= 2

    @property
    def relative(self):
        return self.labeling is Labeling.RELATIVE

    def replace_nodes(self, mapping):
        """New graph where nodes are substituted by ``mapping[id]``."""
        return replace(self, nodes=tuple(mapping.get(n.id, n) for n in self.nodes))

    def cost_of(self, arc_id, exec_times=None):
        arc = self.arc(arc_id)
        if exec_times is not None:
            if arc.block in exec_times:
                return Fraction(exec_times[arc.block])
            if arc.id in exec_times:
                return Fraction(exec_times[arc.id])
        return arc.cost

    def recost(self, exec_times):
        """Apply an execution-time map (block id -> cost) to the arcs."""
        arcs = []
        for a in self.arcs:
            if a.block in exec_times:
                a = replace(a, cost=as_time(exec_times[a.block]))
            elif a.id in exec_times:
                a = replace(a, cost=as_time(exec_times[a.id]))
            arcs.append(a)
        return replace(self, arcs=tuple(arcs))

    def __str__(self):
        parts = [f"{self.name} ({self.labeling.value}, initial {self.initial})"]
        for a in self.arcs:
            parts.append(
                f"  {self.node(a.src)} --{a.label}[{format_time(a.cost)}]--> {self.node(a.dst)}"
            )
        return "\n".join(parts)


def exec_time_map(*graphs):
    """The required-execution-time function of a set of graphs."""
    out = {}
    for g in graphs:
        for a in g.arcs:
            out.setdefault(a.block, a.cost)
    return out


def build_chain(items, name="task", labeling=Labeling.ABSOLUTE):
    """Build a chain from an alternating list ``[node, (arc name, cost), node, ...]``.

    Arc ids are the block names.
    """
    nodes = [items[0]]
    arcs = []
    for i in range(1, len(items), 2):
        block, cost = items[i]
        dst = items[i + 1]
        arcs.append(Arc(block, nodes[-1].id, dst.id, block, as_time(cost)))
        nodes.append(dst)
    return TcaGraph(tuple(nodes), tuple(arcs), nodes[0].id, labeling, name)


# -- structure ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    args: tuple = field(default=())

    def __str__(self):
        def fmt(x):
            if x is INF or isinstance(x, Fraction):
                return format_time(x)
            if isinstance(x, (tuple, list)):
                return "[" + ", ".join(fmt(y) for y in x) + "]"
            return str(x)

        return f"{self.kind}({', '.join(fmt(a) for a in self.args)})"


def find_cycle(node_ids, successors):
    """Return one cycle (list of node ids) of the graph, or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in node_ids}
    for root in node_ids:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(successors(root)))]
        path = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
                continue
            if nxt not in color:
                continue
            if color[nxt] == GREY:
                return path[path.index(nxt):]
            if color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(successors(nxt))))
                path.append(nxt)
    return None


def is_acyclic(graph):
    return find_cycle([n.id for n in graph.nodes], lambda n: [a.dst for a in graph.out_arcs(n)]) is None


def topological_order(graph):
    indeg = {n.id: 0 for n in graph.nodes}
    for a in graph.arcs:
        indeg[a.dst] += 1
    ready = [n.id for n in graph.nodes if indeg[n.id] == 0]
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for a in graph.out_arcs(n):
            indeg[a.dst] -= 1
            if indeg[a.dst] == 0:
                ready.append(a.dst)
    if len(order) != len(graph.nodes):
        raise NotAcyclic(f"{graph.name} contains a cycle")
    return order


def reachable_nodes(graph, start):
    seen = {start}
    todo = [start]
    while todo:
        n = todo.pop()
        for a in graph.out_arcs(n):
            if a.dst not in seen:
                seen.add(a.dst)
                todo.append(a.dst)
    return seen


def zeno_cycle(graph):
    """A cycle that crosses no after/sync node of positive date, or None."""

    def advancing(n):
        node = graph.node(n)
        return node.release is not None and node.release > 0

    ids = [n.id for n in graph.nodes if not advancing(n.id)]
    keep = set(ids)
    return find_cycle(
        ids, lambda n: [a.dst for a in graph.out_arcs(n) if a.dst in keep]
    )


def validate_graph(graph):
    """List the structural invariants broken by ``graph`` (empty if well formed)."""
    out = []
    node_ids = [n.id for n in graph.nodes]
    arc_ids = [a.id for a in graph.arcs]
    seen = set()
    for i in node_ids + arc_ids:
        if i in seen:
            out.append(Violation("DuplicateId", (i,)))
        seen.add(i)
    nodes = set(node_ids)
    if graph.initial not in nodes:
        out.append(Violation("UnknownInitial", (graph.initial,)))
    for a in graph.arcs:
        for end in (a.src, a.dst):
            if end not in nodes:
                out.append(Violation("DanglingArc", (a.id, end)))
        if a.cost < 0:
            out.append(Violation("NegativeCost", (a.id, a.cost)))
    for n in graph.nodes:
        if n.kind is not Kind.PLAIN:
            if n.date is None:
                out.append(Violation("MissingDate", (n.id,)))
                continue
            if n.date is INF and n.kind is not Kind.BEFORE:
                out.append(Violation("InfiniteAfter", (n.id,)))
            elif n.date < 0:
                out.append(Violation("NegativeDate", (n.id, n.date)))
        elif n.date is not None:
            out.append(Violation("PlainWithDate", (n.id,)))
        if n.inherited_deadline is not None:
            if not graph.is_choice(n.id) and n.kind not in (Kind.AFTER, Kind.SYNC):
                out.append(Violation("MisplacedInheritedDeadline", (n.id,)))
    if out:
        # reachability and cycles are meaningless on a broken structure
        return out
    reach = reachable_nodes(graph, graph.initial)
    for n in node_ids:
        if n not in reach:
            out.append(Violation("Unreachable", (n,)))
    cyclic = not is_acyclic(graph)
    if cyclic and graph.labeling is Labeling.ABSOLUTE:
        out.append(Violation("CyclicAbsolute", (graph.name,)))
    if graph.labeling is Labeling.RELATIVE:
        cycle = zeno_cycle(graph)
        if cycle is not None:
            out.append(Violation("ZenoCycle", tuple(cycle)))
    return out


def classify(graph):
    """Most specific class among chain, tree and automaton."""
    if not is_acyclic(graph):
        return GraphClass.AUTOMATON
    indeg = {n.id: 0 for n in graph.nodes}
    for a in graph.arcs:
        indeg[a.dst] += 1
    if any(d > 1 for d in indeg.values()):
        return GraphClass.AUTOMATON
    if all(len(graph.out_arcs(n.id)) <= 1 for n in graph.nodes):
        return GraphClass.CHAIN
    return GraphClass.TREE


# -- precedence and implicit windows ------------------------------------------


def _element_successors(graph, x):
    if graph.has_node(x):
        return [a.id for a in graph.out_arcs(x)]
    return [graph.arc(x).dst]


def _check_element(graph, x):
    if not (graph.has_node(x) or graph.has_arc(x)):
        raise UnknownElement(f"{x!r} is neither a node nor an arc of {graph.name}")


def precedes(graph, x, y):
    """True iff node-or-arc ``x`` strictly precedes ``y`` in an acyclic graph."""
    _check_element(graph, x)
    _check_element(graph, y)
    if not is_acyclic(graph):
        raise NotAcyclic("precedes is only defined on acyclic graphs")
    seen = set()
    todo = list(_element_successors(graph, x))
    while todo:
        e = todo.pop()
        if e == y:
            return True
        if e in seen:
            continue
        seen.add(e)
        todo.extend(_element_successors(graph, e))
    return False


def succeeds(graph, x, y):
    return precedes(graph, y, x)


def _require_absolute_acyclic(graph):
    if graph.labeling is not Labeling.ABSOLUTE:
        raise NotAbsolute(f"{graph.name} uses relative labeling")
    if not is_acyclic(graph):
        raise NotAcyclic(f"{graph.name} contains a cycle")


def _ancestors(graph, node_id):
    seen = {node_id}
    todo = [node_id]
    while todo:
        n = todo.pop()
        for a in graph.in_arcs(n):
            if a.src not in seen:
                seen.add(a.src)
                todo.append(a.src)
    return seen


def implicit_start(graph, arc_id):
    arc = graph.arc(arc_id)
    start = Fraction(0)
    for n in _ancestors(graph, arc.src):
        r = graph.node(n).release
        if r is not None and r > start:
            start = r
    return start


def _maximal_paths(graph, node_id):
    """All paths (as node-id lists) from ``node_id`` to a leaf, in arc order."""
    paths = []
    stack = [(node_id, [node_id])]
    while stack:
        n, path = stack.pop()
        outs = graph.out_arcs(n)
        if not outs:
            paths.append(path)
            continue
        for a in reversed(outs):
            stack.append((a.dst, path + [a.dst]))
    return paths


def implicit_window(graph, arc_id):
    """Start date and per-path deadlines of a block in an absolute acyclic graph.

    Returns ``(start, deadlines)`` where ``deadlines`` has one entry per
    maximal path through the block, in arc declaration order.
    """
    _require_absolute_acyclic(graph)
    arc = graph.arc(arc_id)
    start = implicit_start(graph, arc_id)
    deadlines = []
    for path in _maximal_paths(graph, arc.dst):
        deadlines.append(min((deadline_bound(graph.node(n)) for n in path), default=INF))
    return start, deadlines


def min_possible_deadline(graph, arc_id):
    """Soonest deadline the block may be subject to, over all continuations."""
    _require_absolute_acyclic(graph)
    arc = graph.arc(arc_id)
    best = INF
    for n in reachable_nodes(graph, arc.dst):
        d = deadline_bound(graph.node(n))
        if d < best:
            best = d
    return best
