"""Independent reference computations used to check [DERIVED] values.

Nothing here calls the package's algorithms; they walk paths and enumerate
slot assignments directly from the graph data.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

INF = float("inf")


def maximal_paths(graph):
    """All root-to-leaf arc sequences of an acyclic graph."""
    out = []

    def walk(node, arcs):
        outs = [a for a in graph.arcs if a.src == node]
        if not outs:
            out.append(arcs)
        for a in outs:
            walk(a.dst, arcs + [a])

    walk(graph.initial, [])
    return out


def _node(graph, node_id):
    return next(n for n in graph.nodes if n.id == node_id)


def _release(node):
    return node.date if node.kind.value in ("after", "sync") else None


def _deadline(node):
    ds = []
    if node.kind.value in ("before", "sync") and node.date is not None:
        ds.append(node.date)
    if node.inherited_deadline is not None:
        ds.append(node.inherited_deadline)
    return min(ds) if ds else INF


def path_window(graph, path, k):
    """(start, deadline) of the k-th arc of ``path`` by direct inspection."""
    before_nodes = [graph.initial] + [a.dst for a in path[:k]]
    after_nodes = [a.dst for a in path[k:]]
    start = max([_release(_node(graph, n)) or 0 for n in before_nodes] + [0])
    deadline = min([_deadline(_node(graph, n)) for n in after_nodes] + [INF])
    return Fraction(start), deadline


def windows_by_path(graph, arc_id):
    """Start and the per-path deadlines of an arc, from path enumeration."""
    starts, deadlines = set(), []
    for path in maximal_paths(graph):
        for k, a in enumerate(path):
            if a.id == arc_id:
                s, d = path_window(graph, path, k)
                starts.add(s)
                deadlines.append(d)
    assert len(starts) == 1
    return starts.pop(), deadlines


def chain_rows(chain):
    """Blocks of a chain in order with their windows and costs."""
    path = maximal_paths(chain)[0]
    return [(a.block, *path_window(chain, path, k), a.cost) for k, a in enumerate(path)]


def brute_force_feasible(chains, horizon):
    """Try every assignment of the unit slots [k, k+1) to a task or to idling.

    Only usable for tiny instances: (tasks + 1) ** horizon assignments.
    """
    rows = [chain_rows(c) for c in chains]
    for assignment in itertools.product(range(len(chains) + 1), repeat=horizon):
        if _accepts(rows, assignment, horizon):
            return True
    return False


def _accepts(rows, assignment, horizon):
    for i, blocks in enumerate(rows):
        pos, done, t_prev = 0, 0, 0
        slots = [k for k, who in enumerate(assignment) if who == i + 1]
        for k in slots:
            # zero-cost blocks complete as soon as their start allows
            while pos < len(blocks) and blocks[pos][3] == 0:
                start, deadline = blocks[pos][1], blocks[pos][2]
                t = max(t_prev, start)
                if t > k or t > deadline:
                    break
                t_prev = t
                pos += 1
            if pos >= len(blocks):
                return False
            _, start, deadline, cost = blocks[pos]
            if cost == 0 or k < start or k + 1 > deadline:
                return False
            done += 1
            if done == cost:
                pos, done, t_prev = pos + 1, 0, k + 1
        while pos < len(blocks):
            _, start, deadline, cost = blocks[pos]
            if cost == 0 and max(t_prev, start) <= min(deadline, horizon):
                t_prev = max(t_prev, start)
                pos += 1
                continue
            if deadline <= horizon:
                return False
            break
    return True
