"""Graph rewrites: simplification, relabeling, unfolding, CDI and chain extraction."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, replace
from fractions import Fraction

from .core import (
    INF,
    Arc,
    Kind,
    Labeling,
    Node,
    TcaGraph,
    as_time,
    is_acyclic,
    topological_order,
    validate_graph,
    with_kind,
    zeno_cycle,
)
from .errors import (
    AmbiguousBase,
    BudgetExceeded,
    ImpossibleConstraints,
    InvalidGraph,
    NotAbsolute,
    NotAcyclic,
    NotRelative,
    NotSimplified,
    UnresolvedChoice,
    ZenoCycle,
)


@dataclass(frozen=True)
class Horizon:
    """Finite date beyond which unfolding and simulation stop."""

    bound: Fraction

    def __post_init__(self):
        b = as_time(self.bound)
        if b is INF or b <= 0:
            raise ValueError("horizon must be finite and positive")
        object.__setattr__(self, "bound", b)


def horizon_bound(horizon):
    if isinstance(horizon, Horizon):
        return horizon.bound
    return Horizon(horizon).bound


def _require_valid(graph):
    problems = validate_graph(graph)
    zeno = [v for v in problems if v.kind == "ZenoCycle"]
    if zeno:
        raise ZenoCycle(zeno[0].args)
    if problems:
        raise InvalidGraph(problems)


def _drop_after(node):
    if node.kind is Kind.SYNC:
        return with_kind(node, Kind.BEFORE, node.date)
    return with_kind(node, Kind.PLAIN)


def _drop_before(node):
    if node.kind is Kind.SYNC:
        return with_kind(node, Kind.AFTER, node.date)
    return with_kind(node, Kind.PLAIN)


# -- simplification -----------------------------------------------------------


def simplify(graph):
    """Remove redundant constraints and merge zero-width after/before pairs.

    Raises :class:`ImpossibleConstraints` when an after node precedes a
    before node of an earlier date, or of the same date with a non-empty
    block in between. Redundant constraint nodes become plain nodes so arc
    identities survive; only merged pairs are contracted.
    """
    _require_valid(graph)
    g = graph
    while True:
        if g.relative:
            _check_impossible_relative(g)
            h = _drop_redundant_relative(g)
        else:
            _check_impossible_absolute(g)
            h = _drop_redundant_absolute(g)
        h = _merge_once(h)
        if h == g:
            return h
        g = h


def _check_impossible_absolute(g):
    for n in g.nodes:
        r = n.release
        if r is None:
            continue
        stack = [(a.dst, a.cost > 0) for a in g.out_arcs(n.id)]
        seen = set()
        while stack:
            m, positive = stack.pop()
            if (m, positive) in seen:
                continue
            seen.add((m, positive))
            d = g.node(m).deadline
            if d is not None and (d < r or (d == r and positive)):
                raise ImpossibleConstraints(n.id, m)
            for a in g.out_arcs(m):
                stack.append((a.dst, positive or a.cost > 0))


def _check_impossible_relative(g):
    # dates are offsets from the last after node, so only a before at offset
    # 0 behind a non-empty block can contradict the after that opened the segment
    for n in g.nodes:
        if n.release is None:
            continue
        stack = [(a.dst, a.cost > 0) for a in g.out_arcs(n.id)]
        seen = set()
        while stack:
            m, positive = stack.pop()
            if (m, positive) in seen:
                continue
            seen.add((m, positive))
            node = g.node(m)
            if node.deadline == 0 and positive:
                raise ImpossibleConstraints(n.id, m)
            if node.release is not None and node.release > 0:
                continue
            for a in g.out_arcs(m):
                stack.append((a.dst, positive or a.cost > 0))


def _drop_redundant_absolute(g):
    order = topological_order(g)
    # strongest release guaranteed on every path strictly before each node
    guaranteed = {}
    for n in order:
        ins = g.in_arcs(n)
        if not ins:
            guaranteed[n] = None
            continue
        vals = []
        for a in ins:
            p = g.node(a.src)
            cands = [x for x in (p.release, guaranteed[a.src]) if x is not None]
            vals.append(max(cands) if cands else None)
        guaranteed[n] = None if any(v is None for v in vals) else min(vals)
    # weakest deadline guaranteed on every path strictly after each node
    bound_after = {}
    for n in reversed(order):
        outs = g.out_arcs(n)
        if not outs:
            bound_after[n] = INF
            continue
        vals = []
        for a in outs:
            s = g.node(a.dst)
            d = s.deadline if s.deadline is not None else INF
            vals.append(min(d, bound_after[a.dst]))
        bound_after[n] = max(vals)
    changed = {}
    for n in g.nodes:
        node = n
        gr = guaranteed[n.id]
        if node.release is not None and gr is not None and gr >= node.release:
            node = _drop_after(node)
        if node.deadline is not None and node.deadline >= bound_after[n.id]:
            node = _drop_before(node)
        if node != n:
            changed[n.id] = node
    return g.replace_nodes(changed) if changed else g


def _reachable_before_any_after(g):
    """Nodes reachable from the root without crossing an after/sync node first."""
    seen = {g.initial}
    todo = [g.initial]
    while todo:
        n = todo.pop()
        if g.node(n).release is not None:
            continue
        for a in g.out_arcs(n):
            if a.dst not in seen:
                seen.add(a.dst)
                todo.append(a.dst)
    return seen


def _before_redundant_relative(g, node):
    b = node.deadline
    if b is INF:
        return True
    memo = {}
    active = set()

    def covered(m, off):
        if off > b:
            return False
        key = (m, off)
        if key in memo:
            return memo[key]
        if key in active:
            return False
        active.add(key)
        nm = g.node(m)
        if nm.deadline is not None and off + nm.deadline <= b:
            result = True
        else:
            outs = g.out_arcs(m)
            nxt = off + (nm.release or 0)
            result = bool(outs) and all(covered(a.dst, nxt) for a in outs)
        active.discard(key)
        memo[key] = result
        return result

    outs = g.out_arcs(node.id)
    start = node.release or Fraction(0)
    return bool(outs) and all(covered(a.dst, start) for a in outs)


def _drop_redundant_relative(g):
    open_root = _reachable_before_any_after(g)
    changed = {}
    for n in g.nodes:
        node = n
        if node.release == 0 and n.id not in open_root:
            node = _drop_after(node)
        if node.deadline is not None and _before_redundant_relative(g, node):
            node = _drop_before(node)
        if node != n:
            changed[n.id] = node
    return g.replace_nodes(changed) if changed else g


def _linear_zero_path(g, start, accept):
    """Follow zero-cost arcs through plain pass-through nodes from ``start``.

    Returns the node and arc id lists of the path to the first node for
    which ``accept`` holds, or None.
    """
    nodes = [start]
    arcs = []
    cur = start
    while True:
        outs = g.out_arcs(cur)
        if len(outs) != 1 or outs[0].cost != 0:
            return None
        a = outs[0]
        nxt = a.dst
        if nxt in nodes or len(g.in_arcs(nxt)) != 1:
            return None
        nodes.append(nxt)
        arcs.append(a.id)
        node = g.node(nxt)
        if accept(node):
            return nodes, arcs
        if node.kind is not Kind.PLAIN or nxt == g.initial:
            return None
        cur = nxt


def _merge_once(g):
    rel = g.relative
    for n in g.nodes:
        if n.kind is Kind.AFTER:
            target = Fraction(0) if rel else n.date
            found = _linear_zero_path(
                g, n.id, lambda m: m.kind is Kind.BEFORE and m.date == target
            )
            if found:
                return _contract(g, found, n.date)
        elif n.kind is Kind.BEFORE:
            found = _linear_zero_path(
                g, n.id, lambda m: m.kind is Kind.AFTER and m.date == n.date
            )
            if found:
                return _contract(g, found, n.date)
    return g


def _contract(g, found, date):
    path_nodes, path_arcs = found
    first, last = path_nodes[0], path_nodes[-1]
    survivor = last if last == g.initial else first
    removed_nodes = set(path_nodes) - {survivor}
    removed_arcs = set(path_arcs)
    merged = Node(
        survivor,
        Kind.SYNC,
        date,
        inherited_deadline=g.node(last).inherited_deadline,
        origin=g.node(survivor).origin,
    )
    nodes = []
    for n in g.nodes:
        if n.id == survivor:
            nodes.append(merged)
        elif n.id not in removed_nodes:
            nodes.append(n)
    arcs = []
    for a in g.arcs:
        if a.id in removed_arcs:
            continue
        src = survivor if a.src in removed_nodes else a.src
        dst = survivor if a.dst in removed_nodes else a.dst
        arcs.append(replace(a, src=src, dst=dst) if (src, dst) != (a.src, a.dst) else a)
    return replace(g, nodes=tuple(nodes), arcs=tuple(arcs))


# -- relabeling ----------------------------------------------------------------


def _bases(g, absolute_input):
    """Base date (last after/sync before each node) along every path.

    With ``absolute_input`` node dates are absolute, otherwise relative.
    Returns ``(base_in, absolute_date)`` dictionaries.
    """
    order = topological_order(g)
    base_in = {}
    abs_date = {}
    for n in order:
        ins = g.in_arcs(n)
        if not ins:
            base = Fraction(0)
        else:
            cands = set()
            for a in ins:
                p = g.node(a.src)
                cands.add(abs_date[a.src] if p.release is not None else base_in[a.src])
            if len(cands) > 1:
                raise AmbiguousBase(
                    f"node {n!r} is reached with different time bases; unfold first"
                )
            base = cands.pop()
        base_in[n] = base
        node = g.node(n)
        if node.date is None:
            abs_date[n] = None
        elif absolute_input:
            abs_date[n] = node.date
        else:
            abs_date[n] = base + node.date
    return base_in, abs_date


def to_relative(graph):
    """Rewrite absolute dates as offsets from the previous after/sync node."""
    if graph.labeling is not Labeling.ABSOLUTE:
        raise NotAbsolute(f"{graph.name} is already relative")
    if not is_acyclic(graph):
        raise NotAcyclic(f"{graph.name} contains a cycle")
    base_in, _ = _bases(graph, absolute_input=True)
    changed = {}
    for n in graph.nodes:
        base = base_in[n.id]
        date = n.date
        inh = n.inherited_deadline
        if date is not None:
            if date < base:
                raise NotSimplified(
                    f"node {n.id!r} dated {date} follows an after node dated {base}"
                )
            date = date - base
        if inh is not None:
            if inh < base:
                raise NotSimplified(f"inherited deadline of {n.id!r} precedes its base")
            inh = inh - base
        changed[n.id] = replace(n, date=date, inherited_deadline=inh)
    return replace(graph.replace_nodes(changed), labeling=Labeling.RELATIVE)


def to_absolute(graph):
    """Accumulate relative dates from the root into absolute dates."""
    if graph.labeling is not Labeling.RELATIVE:
        raise NotRelative(f"{graph.name} is already absolute")
    if not is_acyclic(graph):
        raise NotAcyclic(f"{graph.name} is cyclic; unfold it instead")
    base_in, abs_date = _bases(graph, absolute_input=False)
    changed = {}
    for n in graph.nodes:
        inh = n.inherited_deadline
        if inh is not None:
            inh = base_in[n.id] + inh
        changed[n.id] = replace(n, date=abs_date[n.id], inherited_deadline=inh)
    return replace(graph.replace_nodes(changed), labeling=Labeling.ABSOLUTE)


# -- unfolding -----------------------------------------------------------------


def unfold(graph, horizon, max_nodes=200_000):
    """Unfold an automaton into its absolute tree, cut past ``horizon``.

    A branch stops at the first node whose absolute after/sync date exceeds
    the horizon; that node is kept with ``frontier=True`` and no children.
    The first copy of each node and arc keeps its id; later copies get a
    ``~k`` suffix and record the original in ``origin``.
    """
    bound = horizon_bound(horizon)
    _require_valid(graph)
    rel = graph.relative
    counters = {}

    def fresh(orig_id):
        k = counters.get(orig_id, 0)
        counters[orig_id] = k + 1
        return orig_id if k == 0 else f"{orig_id}~{k}"

    nodes = []
    arcs = []

    def emit_node(orig, base):
        new_id = fresh(orig.id)
        if orig.date is None:
            date = None
        else:
            date = base + orig.date if rel else orig.date
        inh = orig.inherited_deadline
        if inh is not None and rel:
            inh = base + inh
        cut = orig.release is not None and date > bound
        node = replace(
            orig,
            id=new_id,
            date=date,
            inherited_deadline=inh,
            origin=orig.origin if new_id == orig.id else orig.source,
            frontier=cut or orig.frontier,
        )
        nodes.append(node)
        if len(nodes) > max_nodes:
            raise BudgetExceeded(f"unfolding {graph.name} exceeds {max_nodes} nodes")
        next_base = date if (orig.release is not None) else base
        return node, next_base, cut

    root, base, cut = emit_node(graph.node(graph.initial), Fraction(0))
    stack = [] if cut else [(root.id, graph.initial, base)]
    while stack:
        tree_id, orig_id, base = stack.pop()
        children = []
        for a in graph.out_arcs(orig_id):
            child, child_base, cut = emit_node(graph.node(a.dst), base)
            arc_id = fresh(a.id)
            arcs.append(
                replace(
                    a,
                    id=arc_id,
                    src=tree_id,
                    dst=child.id,
                    origin=a.origin if arc_id == a.id else a.block,
                )
            )
            if not cut:
                children.append((child.id, a.dst, child_base))
        stack.extend(reversed(children))
    return TcaGraph(tuple(nodes), tuple(arcs), root.id, Labeling.ABSOLUTE, graph.name)


# -- choice deadline inheritance ----------------------------------------------


def inherited_deadline(graph, node_id):
    """Soonest before date among the nodes that may follow ``node_id``.

    For relative graphs the result is expressed from the base preceding the
    node. Uses a best-first search on accumulated after dates, pruned by the
    best deadline found so far. Returns INF when no before node follows.
    """
    node = graph.node(node_id)
    if not graph.relative:
        best = INF
        seen = set()
        todo = [a.dst for a in graph.out_arcs(node_id)]
        while todo:
            m = todo.pop()
            if m in seen:
                continue
            seen.add(m)
            d = graph.node(m).deadline
            if d is not None and d < best:
                best = d
            todo.extend(a.dst for a in graph.out_arcs(m))
        return best
    start = node.release or Fraction(0)
    best = INF
    dist = {}
    heap = []
    tie = itertools.count()
    for a in graph.out_arcs(node_id):
        heapq.heappush(heap, (start, next(tie), a.dst))
    while heap:
        off, _, m = heapq.heappop(heap)
        if off >= best:
            break
        if m in dist:
            continue
        dist[m] = off
        nm = graph.node(m)
        if nm.deadline is not None and off + nm.deadline < best:
            best = off + nm.deadline
        nxt = off + (nm.release or 0)
        for a in graph.out_arcs(m):
            if a.dst not in dist:
                heapq.heappush(heap, (nxt, next(tie), a.dst))
    return best


def apply_cdi(graph):
    """Annotate every choice node with the soonest deadline that may follow it."""
    _require_valid(graph)
    changed = {}
    for n in graph.nodes:
        if not graph.is_choice(n.id):
            continue
        tau = inherited_deadline(graph, n.id)
        new = replace(n, inherited_deadline=None if tau is INF else tau)
        if new != n:
            changed[n.id] = new
    return graph.replace_nodes(changed) if changed else graph


# -- chain extraction -----------------------------------------------------------


def choice_occurrences(tree):
    """Pairs (occurrence path, node id) for every choice node of a tree."""
    out = []
    stack = [(tree.initial, ())]
    while stack:
        n, path = stack.pop()
        outs = tree.out_arcs(n)
        if len(outs) >= 2:
            out.append((path, n))
        for a in reversed(outs):
            stack.append((a.dst, path + (a.block,)))
    return out


def _fold_inherited(node):
    tau = node.inherited_deadline
    if tau is None:
        return node
    if node.kind is Kind.PLAIN:
        return Node(node.id, Kind.BEFORE, tau, None, node.origin, node.frontier)
    if node.kind is Kind.BEFORE:
        return replace(node, date=min(node.date, tau), inherited_deadline=None)
    if node.kind is Kind.SYNC and tau >= node.date:
        return replace(node, inherited_deadline=None)
    return node


def extract_chains(trees, choices):
    """Paths of ``trees`` selected by ``choices``, returned as chains.

    ``choices`` maps ``(task name, occurrence)`` to the chosen block, where an
    occurrence is the tuple of block ids leading from the root to the choice
    node. Inherited deadlines on crossed choice nodes become before
    constraints of the chain.
    """
    chains = []
    for tree in trees:
        if tree.labeling is not Labeling.ABSOLUTE:
            raise NotAbsolute(f"{tree.name} must be an absolute tree")
        if not is_acyclic(tree):
            raise NotAcyclic(f"{tree.name} must be unfolded first")
        n = tree.initial
        path = ()
        nodes = []
        arcs = []
        while True:
            node = tree.node(n)
            outs = tree.out_arcs(n)
            if len(outs) >= 2:
                key = (tree.name, path)
                if key not in choices:
                    raise UnresolvedChoice(tree.name, path)
                wanted = choices[key]
                picked = [a for a in outs if a.block == wanted or a.id == wanted]
                if not picked:
                    raise UnresolvedChoice(tree.name, path)
                nodes.append(_fold_inherited(node))
                a = picked[0]
            else:
                nodes.append(node)
                if not outs:
                    break
                a = outs[0]
            arcs.append(a)
            path = path + (a.block,)
            n = a.dst
        chains.append(TcaGraph(tuple(nodes), tuple(arcs), tree.initial, Labeling.ABSOLUTE, tree.name))
    return chains
