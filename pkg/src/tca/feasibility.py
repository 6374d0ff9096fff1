"""Exhaustive feasibility oracles for small integer instances.

Dates and costs are scaled to integers, then every assignment of unit
slots [k, k+1) to tasks (or to idling) is explored, memoized on the slot
index and the progress of each task. Preemption at integer instants loses
nothing when all dates are integers: inside each unit slot, work can be
rearranged without crossing a constraint date.

For trees, the search is an AND-OR search. When a block preceding a choice
node completes, every branch must lead to success while the slots already
played stay fixed, so branches automatically coincide before their
differentiating choice.

Deadlines only order the exploration; the verdict comes from the full
search and shares no code with the EDF schedulers, so agreement between
the two is a meaningful test.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .core import INF, GraphClass, Labeling, classify, deadline_bound
from .errors import BudgetExceeded, NotAbsolute, TcaError
from .scheduler import ScheduleMapping, Segment, TreeSchedule, merge_segments
from .transform import horizon_bound, unfold

DEFAULT_BUDGET = 1024


def _scale_graph(g, k):
    def mul(x):
        return None if x is None or x is INF else x * k

    nodes = tuple(replace(n, date=mul(n.date), inherited_deadline=mul(n.inherited_deadline)) for n in g.nodes)
    arcs = tuple(replace(a, cost=a.cost * k) for a in g.arcs)
    return replace(g, nodes=nodes, arcs=arcs)


@dataclass(frozen=True)
class DiscreteInstance:
    """Graphs with integer dates and costs; ``scale`` ticks per original unit."""

    graphs: tuple
    horizon: int
    scale: int = 1

    @classmethod
    def build(cls, graphs, horizon):
        horizon = horizon_bound(horizon)
        graphs = tuple(graphs)
        dens = [horizon.denominator]
        for g in graphs:
            for n in g.nodes:
                for x in (n.date, n.inherited_deadline):
                    if x is not None and x is not INF:
                        dens.append(Fraction(x).denominator)
            dens.extend(Fraction(a.cost).denominator for a in g.arcs)
        k = math.lcm(*dens)
        return cls(tuple(_scale_graph(g, k) for g in graphs), int(horizon * k), k)


@dataclass
class FeasibilityVerdict:
    feasible: bool
    witness: object = None
    certificate: dict | None = None
    stats: dict = field(default_factory=dict)

    def __bool__(self):
        return self.feasible


class _Tree:
    """Precomputed facts about one absolute tree."""

    def __init__(self, g, horizon):
        self.g = g
        self.name = g.name
        self.start = {}
        self.start_by = {}
        self.path = {}
        stack = [(g.initial, Fraction(0), None, ())]
        while stack:
            n, base, by, path = stack.pop()
            node = g.node(n)
            if node.release is not None and node.release >= base:
                base, by = node.release, n
            self.start[n] = base
            self.start_by[n] = by
            self.path[n] = path
            for a in g.out_arcs(n):
                stack.append((a.dst, base, by, path + (a.block,)))
        self.min_reach = {}
        for n in sorted(self.start, key=lambda n: -len(self.path[n])):
            node = g.node(n)
            if node.frontier or (node.release is not None and node.release > horizon):
                self.min_reach[n] = INF
                continue
            best = deadline_bound(node)
            for a in g.out_arcs(n):
                best = min(best, self.min_reach[a.dst])
            self.min_reach[n] = best

    def cut(self, n, horizon):
        node = self.g.node(n)
        return node.frontier or (node.release is not None and node.release > horizon)


class _Search:
    def __init__(self, trees, horizon, max_states):
        self.trees = trees
        self.H = horizon
        self.memo = {}
        self.max_states = max_states

    def settle(self, t, state):
        """Complete finished blocks and enter arcs; stop at a choice or a failure."""
        state = list(state)
        for i, tr in enumerate(self.trees):
            while True:
                node, arc, done = state[i]
                if arc is None:
                    outs = tr.g.out_arcs(node)
                    if not outs or tr.cut(node, self.H):
                        break
                    if len(outs) >= 2:
                        return "choice", i, tuple(state)
                    state[i] = (node, outs[0].id, 0)
                    continue
                a = tr.g.arc(arc)
                if done < a.cost or tr.start[a.src] > t:
                    break
                if t > deadline_bound(tr.g.node(a.dst)):
                    return "fail", None, None
                state[i] = (a.dst, None, 0)
        return "ok", None, tuple(state)

    def solve(self, t, state):
        key = (t, state)
        if key in self.memo:
            return self.memo[key][0]
        if len(self.memo) >= self.max_states:
            raise BudgetExceeded(f"more than {self.max_states} search states")
        self.memo[key] = (False, None)
        result = self._solve(t, state)
        self.memo[key] = result
        return result[0]

    def _solve(self, t, state):
        kind, i, settled = self.settle(t, state)
        if kind == "fail":
            return False, None
        if kind == "choice":
            tr = self.trees[i]
            node = settled[i][0]
            for a in tr.g.out_arcs(node):
                nxt = settled[:i] + ((node, a.id, 0),) + settled[i + 1:]
                if not self.solve(t, nxt):
                    return False, None
            return True, ("fork", i)
        if settled != state:
            return self.solve(t, settled), ("same", None)
        # prune: some block can no longer finish in time
        for tr, (node, arc, done) in zip(self.trees, state):
            if arc is None:
                continue
            a = tr.g.arc(arc)
            deadline = tr.min_reach[a.dst]
            if deadline <= self.H and max(t, tr.start[a.src]) + (a.cost - done) > deadline:
                return False, None
        if t >= self.H:
            return True, ("end", None)
        options = []
        for j, (tr, (node, arc, done)) in enumerate(zip(self.trees, state)):
            if arc is not None:
                a = tr.g.arc(arc)
                if done < a.cost and tr.start[a.src] <= t:
                    options.append((tr.min_reach[a.dst], j))
        for _, j in sorted(options):
            node, arc, done = state[j]
            nxt = state[:j] + ((node, arc, done + 1),) + state[j + 1:]
            if self.solve(t + 1, nxt):
                return True, ("run", j)
        if self.solve(t + 1, state):
            return True, ("idle", None)
        return False, None

    # -- witness reconstruction

    def segments_until_fork(self, t, state, scale):
        """Follow recorded decisions; return (segments, fork or None)."""
        segs = []
        while True:
            ok, action = self.memo[(t, state)]
            assert ok
            kind, j = action
            if kind == "end":
                return segs, None, t, state
            if kind == "fork":
                return segs, j, t, state
            if kind == "same":
                state = self.settle(t, state)[2]
                continue
            if kind == "run":
                tr = self.trees[j]
                node, arc, done = state[j]
                a = tr.g.arc(arc)
                occ = tr.path[a.src] + (a.block,)
                segs.append(Segment(tr.name, occ, a.block, Fraction(t, scale), Fraction(t + 1, scale)))
                state = state[:j] + ((node, arc, done + 1),) + state[j + 1:]
            t += 1

    def tree_witness(self, t, state, scale):
        segs, fork, t, state = self.segments_until_fork(t, state, scale)
        ts = TreeSchedule(segments=merge_segments(segs), horizon=Fraction(self.H, scale))
        if fork is None:
            ts.status = "ok"
            return ts
        settled = self.settle(t, state)[2]
        tr = self.trees[fork]
        node = settled[fork][0]
        ts.fork = (tr.name, tr.path[node], Fraction(t, scale))
        for a in tr.g.out_arcs(node):
            nxt = settled[:fork] + ((node, a.id, 0),) + settled[fork + 1:]
            ts.children[a.block] = self.tree_witness(t, nxt, scale)
        return ts


def _path_windows(tr, horizon):
    """Per maximal path, one row per block.

    A row is ``(block, start, deadline, cost, after, before)`` where the last
    two name the nodes setting the start and the deadline (None for the time
    origin or for no deadline).
    """
    g = tr.g
    out = []
    stack = [(g.initial, ())]
    while stack:
        n, arcs = stack.pop()
        outs = g.out_arcs(n) if not tr.cut(n, horizon) else []
        if not outs:
            rows = []
            deadline, by = INF, None
            for a in reversed(arcs):
                node = g.node(a.dst)
                if not tr.cut(a.dst, horizon) and deadline_bound(node) <= deadline:
                    deadline, by = deadline_bound(node), a.dst
                rows.append((a.block, tr.start[a.src], deadline, a.cost, tr.start_by[a.src], by))
            out.append(rows[::-1])
        for a in outs:
            stack.append((a.dst, arcs + (a,)))
    return out


def _certificate(trees, horizon, scale):
    """A simple reason for infeasibility, when one exists.

    Each task contributes its worst branch, which is sound because every
    combination of choices must be served.
    """
    paths = [(tr.name, _path_windows(tr, horizon)) for tr in trees]
    rows_in_horizon = [
        (name, row) for name, plist in paths for rows in plist for row in rows if row[2] <= horizon
    ]
    # windows closed by an after/before pair come first, then those closed at the origin
    empty = [
        (name, row) for name, row in rows_in_horizon
        if row[1] > row[2] or (row[1] == row[2] and row[3] > 0)
    ]
    empty.sort(key=lambda x: x[1][4] is None)
    if empty:
        name, (block, start, deadline, _, after, before) = empty[0]
        return {"kind": "EmptyWindow", "task": name, "block": block,
                "start": Fraction(start, scale), "deadline": Fraction(deadline, scale),
                "after": after, "before": before}
    for name, (block, start, deadline, cost, _, _) in rows_in_horizon:
        if start + cost > deadline:
            return {"kind": "DemandExceedsWindow", "task": name, "block": block,
                    "start": Fraction(start, scale), "deadline": Fraction(deadline, scale),
                    "demand": Fraction(cost, scale)}
    points = set()
    for _, plist in paths:
        for rows in plist:
            for _, start, deadline, _, _, _ in rows:
                points.add(start)
                if deadline <= horizon:
                    points.add(deadline)
    points = sorted(points)
    for s in points:
        for e in points:
            if e <= s:
                continue
            demand = sum(
                max(sum(row[3] for row in rows if s <= row[1] and row[2] <= e) for rows in plist)
                for _, plist in paths
            )
            if demand > e - s:
                return {"kind": "Overload", "start": Fraction(s, scale), "end": Fraction(e, scale),
                        "demand": Fraction(demand, scale)}
    return None


def _run(instance, budget, max_states, want_tree):
    H = instance.horizon
    tasks = len(instance.graphs)
    if H * max(tasks, 1) > budget:
        raise BudgetExceeded(f"horizon {H} x {tasks} tasks exceeds budget {budget}")
    trees = [_Tree(g, H) for g in sorted(instance.graphs, key=lambda g: g.name)]
    search = _Search(trees, H, max_states)
    state = tuple((tr.g.initial, None, 0) for tr in trees)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20 * H + 1000))
    try:
        ok = search.solve(0, state)
    finally:
        sys.setrecursionlimit(limit)
    stats = {"states": len(search.memo), "scale": instance.scale}
    if not ok:
        return FeasibilityVerdict(False, None, _certificate(trees, H, instance.scale), stats)
    witness = search.tree_witness(0, state, instance.scale)
    if not want_tree:
        witness = ScheduleMapping(tuple(witness.segments), witness.horizon)
    return FeasibilityVerdict(True, witness, None, stats)


def _as_instance(instance, horizon):
    if isinstance(instance, DiscreteInstance):
        return instance
    if horizon is None:
        raise TypeError("a horizon is required")
    return DiscreteInstance.build(instance, horizon)


def feasible_chains(instance, horizon=None, budget=DEFAULT_BUDGET, max_states=2_000_000):
    """Decide whether a set of absolute chains has a correct schedule up to the horizon.

    ``instance`` is a :class:`DiscreteInstance` or a sequence of chains
    together with ``horizon``. The witness is a :class:`ScheduleMapping`.
    """
    inst = _as_instance(instance, horizon)
    for g in inst.graphs:
        if g.labeling is not Labeling.ABSOLUTE:
            raise NotAbsolute(f"{g.name} must use absolute labeling")
        if classify(g) is not GraphClass.CHAIN:
            raise TcaError(f"{g.name} is not a chain")
    return _run(inst, budget, max_states, want_tree=False)


def feasible_trees(instance, horizon=None, budget=DEFAULT_BUDGET, max_states=2_000_000):
    """Decide whether trees admit a correct schedule for every set of choices.

    Relative or cyclic graphs are unfolded to the horizon first. The witness
    is a :class:`TreeSchedule`.
    """
    if not isinstance(instance, DiscreteInstance):
        if horizon is None:
            raise TypeError("a horizon is required")
        graphs = []
        for g in instance:
            if g.labeling is Labeling.RELATIVE or classify(g) is GraphClass.AUTOMATON:
                g = unfold(g, horizon)
            graphs.append(g)
        instance = DiscreteInstance.build(graphs, horizon)
    for g in instance.graphs:
        if g.labeling is not Labeling.ABSOLUTE:
            raise NotAbsolute(f"{g.name} must use absolute labeling")
    return _run(instance, budget, max_states, want_tree=True)
