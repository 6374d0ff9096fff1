"""Single-processor scheduling of time-constrained tasks.

The simulator is event driven: it only wakes up when a release date is
reached, a block completes, a deadline falls due or the horizon ends.
Between two wake-ups the running task does not change.

EDF-dyn runs on absolute chains whose windows are precomputed. EDF-dyn-min
runs on trees or relative automata: choice nodes carry the inherited
deadline and the graph is walked (and unfolded) lazily during the run. A
:class:`ChoiceOracle` resolves each choice when the block preceding it
completes; :func:`explore_tree_schedule` instead forks the simulation on
every outcome.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Protocol

from .core import (
    INF,
    GraphClass,
    Labeling,
    Violation,
    classify,
    deadline_bound,
    format_time,
    implicit_window,
)
from .errors import BudgetExceeded, NotAbsolute, TcaError
from .transform import apply_cdi, horizon_bound

HALT = "halt"
RECORD = "record"


@dataclass(frozen=True)
class Segment:
    """Block occurrence ``occurrence[-1]`` of ``task`` runs on [start, end)."""

    task: str
    occurrence: tuple
    block: str
    start: Fraction
    end: Fraction

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"empty or negative segment [{self.start}, {self.end})")

    @property
    def duration(self):
        return self.end - self.start

    def __str__(self):
        return f"{self.task}:{self.block}[{format_time(self.start)},{format_time(self.end)})"


@dataclass(frozen=True)
class Event:
    time: Fraction
    kind: str
    task: str
    occurrence: tuple = ()
    value: object = None
    note: str = ""

    def __str__(self):
        text = f"{format_time(self.time)} {self.kind} {self.task}"
        if self.occurrence:
            text += " @" + "/".join(self.occurrence)
        if self.value is not None:
            v = self.value
            text += " " + (format_time(v) if (v is INF or isinstance(v, Fraction)) else str(v))
        if self.note:
            text += f" ({self.note})"
        return text


@dataclass(frozen=True)
class ScheduleMapping:
    segments: tuple
    horizon: Fraction

    def allocated(self, task, occurrence):
        return sum(
            (s.duration for s in self.segments if s.task == task and s.occurrence == occurrence),
            Fraction(0),
        )

    def running_at(self, t):
        for s in self.segments:
            if s.start <= t < s.end:
                return s
        return None


@dataclass
class SimulationResult:
    schedule: ScheduleMapping
    events: list
    status: str
    choices: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"

    @property
    def misses(self):
        return [e for e in self.events if e.kind == "DeadlineMiss"]


@dataclass(frozen=True)
class ChoiceQuery:
    task: str
    occurrence: tuple
    time: Fraction
    options: tuple
    index: int


class ChoiceOracle(Protocol):
    def __call__(self, query: ChoiceQuery) -> str | tuple: ...


def first_branch(query):
    """Oracle that always takes the first declared branch."""
    return query.options[0]


class FixedChoices:
    """Oracle backed by a choice set ``{(task, occurrence): block}``."""

    def __init__(self, choices, default=None):
        self.choices = dict(choices)
        self.default = default

    def __call__(self, query):
        key = (query.task, query.occurrence)
        if key in self.choices:
            return self.choices[key]
        if self.default is None:
            raise TcaError(f"no choice for {query.task} at {'/'.join(query.occurrence)}")
        return self.default(query), "default"


class ScriptedOracle:
    """Oracle keyed by ``(task, k)``: branch index for the task's k-th choice."""

    def __init__(self, script, default_branch=0):
        self.script = dict(script)
        self.default_branch = default_branch

    def __call__(self, query):
        key = (query.task, query.index)
        if key in self.script:
            idx, note = self.script[key], ""
        else:
            idx, note = self.default_branch, "default"
        if not 0 <= idx < len(query.options):
            raise ChoiceScriptError(
                f"branch {idx} out of range for choice {query.index} of {query.task} "
                f"({len(query.options)} branches)"
            )
        return query.options[idx], note


class ChoiceScriptError(TcaError):
    pass


# -- the simulator ---------------------------------------------------------------


def default_horizon(graphs, exec_times=None):
    """A horizon late enough to see every deadline and completion of acyclic graphs.

    The largest finite date plus the total cost of all blocks. Cyclic graphs
    run forever and need an explicit horizon.
    """
    from .transform import to_absolute

    exec_times = exec_times or {}
    latest, work = Fraction(0), Fraction(0)
    for g in graphs:
        if classify(g) is GraphClass.AUTOMATON:
            raise ValueError(f"{g.name} is cyclic: give an explicit horizon")
        if g.labeling is Labeling.RELATIVE:
            g = to_absolute(g)
        for n in g.nodes:
            for d in (n.date, n.inherited_deadline):
                if d is not None and d is not INF:
                    latest = max(latest, d)
        work += sum((Fraction(exec_times.get(a.block, a.cost)) for a in g.arcs), Fraction(0))
    return max(latest + work, Fraction(1))


@dataclass
class _Task:
    name: str
    graph: object
    node: str = ""
    base: Fraction = Fraction(0)
    path: tuple = ()
    arc: object = None
    release: Fraction = Fraction(0)
    deadline: object = INF
    remaining: Fraction = Fraction(0)
    status: str = "ready"
    choices_made: int = 0
    crossed_before: bool = False


class _Fork(Exception):
    pass


class _Simulator:
    def __init__(self, graphs, exec_times, horizon, policy, windows=None, oracle=None):
        if policy not in (HALT, RECORD):
            raise ValueError(f"unknown miss policy {policy!r}")
        names = [g.name for g in graphs]
        if len(set(names)) != len(names):
            raise ValueError("task names must be distinct")
        self.exec_times = dict(exec_times or {})
        self.horizon = horizon_bound(default_horizon(graphs, self.exec_times) if horizon is None else horizon)
        self.policy = policy
        self.windows = windows
        self.oracle = oracle
        self.t = Fraction(0)
        self.segments = []
        self.events = []
        self.status = "ok"
        self.halted = False
        self.choices = {}
        self.tasks = [_Task(g.name, g) for g in sorted(graphs, key=lambda g: g.name)]
        for s in self.tasks:
            self._arrive(s, s.graph.initial)

    def clone(self):
        other = object.__new__(_Simulator)
        other.__dict__.update(self.__dict__)
        other.tasks = [replace(s) for s in self.tasks]
        other.segments = []
        other.events = []
        other.choices = dict(self.choices)
        return other

    # -- task progression

    def _emit(self, kind, s, value=None, note="", occurrence=None):
        occ = s.path if occurrence is None else occurrence
        self.events.append(Event(self.t, kind, s.name, occ, value, note))

    def _cost(self, arc):
        if arc.block in self.exec_times:
            return Fraction(self.exec_times[arc.block])
        return arc.cost

    def _abs(self, s, date):
        if date is None:
            return None
        if s.graph.labeling is Labeling.RELATIVE:
            return s.base + date
        return date

    def _arrive(self, s, node_id):
        g = s.graph
        node = g.node(node_id)
        s.node = node_id
        s.arc = None
        release = self._abs(s, node.release)
        if node.frontier or (release is not None and release > self.horizon):
            s.status = "done"
            return
        s.crossed_before = deadline_bound(node) is not INF
        if release is not None and release > s.base:
            s.base = release
        outs = g.out_arcs(node_id)
        if not outs:
            s.status = "done"
        elif len(outs) >= 2:
            s.status = "choice"
        else:
            self._enter(s, outs[0])

    def _enter(self, s, arc):
        s.arc = arc
        s.path = s.path + (arc.block,)
        s.remaining = self._cost(arc)
        if self.windows is not None:
            s.release, s.deadline = self.windows[(s.name, arc.id)]
        else:
            s.release, s.deadline = s.base, self._lazy_deadline(s, arc)
        if s.crossed_before:
            self._emit("DeadlineUpdate", s, s.deadline)
            s.crossed_before = False
        if s.release > self.t:
            s.status = "waiting"
            self._emit("Suspend", s, s.release)
        else:
            s.status = "ready"

    def _lazy_deadline(self, s, arc):
        """Soonest deadline of ``arc`` on the graph as known before any choice."""
        g = s.graph
        rel = g.labeling is Labeling.RELATIVE
        base = s.base
        best = INF
        node_id = arc.dst
        seen = set()
        while True:
            node = g.node(node_id)
            for d in (node.deadline, node.inherited_deadline):
                if d is not None:
                    d = base + d if rel else d
                    if d < best:
                        best = d
            if node.release is not None:
                r = base + node.release if rel else node.release
                if r > base:
                    base = r
            outs = g.out_arcs(node_id)
            if len(outs) != 1 or node_id in seen or base >= best:
                return best
            seen.add(node_id)
            node_id = outs[0].dst

    def _complete(self, s):
        self._emit("BlockComplete", s)
        self._arrive(s, s.arc.dst)

    def _resolve(self, s, picked, note=""):
        options = [a for a in s.graph.out_arcs(s.node)]
        chosen = [a for a in options if a.block == picked or a.id == picked]
        if not chosen:
            raise TcaError(f"oracle chose {picked!r}, not a branch of {s.node}")
        arc = chosen[0]
        self.choices[(s.name, s.path)] = arc.block
        self._emit("ChoiceTaken", s, arc.block, note)
        s.choices_made += 1
        self._enter(s, arc)

    def pending_choice(self):
        for s in self.tasks:
            if s.status == "choice":
                return s
        return None

    def query(self, s):
        options = tuple(a.block for a in s.graph.out_arcs(s.node))
        return ChoiceQuery(s.name, s.path, self.t, options, s.choices_made)

    # -- main loop

    def _settle(self):
        changed = True
        while changed:
            changed = False
            for s in self.tasks:
                if s.status == "waiting" and s.release <= self.t:
                    s.status = "ready"
                    self._emit("Release", s, s.release)
                    changed = True
            for s in self.tasks:
                if s.status == "ready" and s.remaining == 0:
                    self._complete(s)
                    changed = True
            for s in self.tasks:
                if s.status == "choice":
                    if self.oracle is None:
                        raise _Fork()
                    answer = self.oracle(self.query(s))
                    picked, note = answer if isinstance(answer, tuple) else (answer, "")
                    self._resolve(s, picked, note)
                    changed = True
            for s in self.tasks:
                if (
                    (s.status == "waiting" or (s.status == "ready" and s.remaining > 0))
                    and s.deadline <= self.t
                    and s.deadline <= self.horizon
                ):
                    self._emit("DeadlineMiss", s, s.deadline)
                    self.status = "deadline-miss"
                    if self.policy == HALT:
                        self.halted = True
                        return
                    s.remaining = Fraction(0)
                    s.status = "ready"
                    changed = True

    def run(self):
        """Simulate up to the horizon; raises _Fork at an unresolved choice."""
        while True:
            self._settle()
            if self.halted or self.t >= self.horizon:
                return
            ready = [s for s in self.tasks if s.status == "ready"]
            nexts = [self.horizon]
            for s in self.tasks:
                if s.status == "waiting":
                    nexts.append(s.release)
                if s.status in ("ready", "waiting") and self.t < s.deadline <= self.horizon:
                    nexts.append(s.deadline)
            pick = None
            if ready:
                pick = min(ready, key=lambda s: (s.deadline, s.name))
                nexts.append(self.t + pick.remaining)
            nt = min(nexts)
            if pick is not None:
                self._run_segment(pick, self.t, nt)
                pick.remaining -= nt - self.t
            self.t = nt

    def _run_segment(self, s, start, end):
        last = self.segments[-1] if self.segments else None
        if last and last.task == s.name and last.occurrence == s.path and last.end == start:
            self.segments[-1] = replace(last, end=end)
        else:
            self.segments.append(Segment(s.name, s.path, s.arc.block, start, end))

    def result(self):
        return SimulationResult(
            ScheduleMapping(tuple(self.segments), self.horizon),
            list(self.events),
            self.status,
            dict(self.choices),
        )


def merge_segments(segments):
    """Join consecutive segments of the same block occurrence."""
    out = []
    for seg in segments:
        if out and out[-1].task == seg.task and out[-1].occurrence == seg.occurrence and out[-1].end == seg.start:
            out[-1] = replace(out[-1], end=seg.end)
        else:
            out.append(seg)
    return out


def _chain_windows(chains):
    windows = {}
    for c in chains:
        if c.labeling is not Labeling.ABSOLUTE:
            raise NotAbsolute(f"{c.name} must use absolute labeling")
        if classify(c) is not GraphClass.CHAIN:
            raise TcaError(f"{c.name} is not a chain")
        for a in c.arcs:
            start, deadlines = implicit_window(c, a.id)
            windows[(c.name, a.id)] = (start, min(deadlines))
    return windows


def edf_dyn(chains, exec_times=None, horizon=None, policy=HALT):
    """Schedule absolute chains with EDF on their current implicit deadlines.

    Ties go to the smallest task name. Costs come from ``exec_times``
    (block id -> cost) when given, else from the arcs.
    """
    chains = list(chains)
    sim = _Simulator(chains, exec_times, horizon, policy, windows=_chain_windows(chains))
    sim.run()
    return sim.result()


def edf_dyn_min(automata, exec_times=None, oracle=first_branch, horizon=None, policy=HALT):
    """EDF-dyn on the choice-deadline-inherited graphs, unfolded on the fly.

    The oracle is asked for each branch exactly when the block preceding the
    choice node completes.
    """
    graphs = [apply_cdi(g) for g in automata]
    sim = _Simulator(graphs, exec_times, horizon, policy, oracle=oracle)
    sim.run()
    return sim.result()


# -- tree schedules ------------------------------------------------------------------


@dataclass
class TreeSchedule:
    """Schedule as a function of the choices, sharing common prefixes.

    A node holds the segments and events produced until the next instant of
    choice; ``fork`` is ``(task, occurrence, time)`` of that choice and
    ``children`` maps each chosen block to the continuation.
    """

    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    horizon: Fraction = Fraction(0)
    status: str | None = None
    fork: tuple | None = None
    children: dict = field(default_factory=dict)

    def branches(self):
        """Yield one :class:`Branch` per complete set of choices."""
        stack = [(self, [], [], {}, [])]
        while stack:
            node, segs, evs, choices, forks = stack.pop()
            segs = segs + node.segments
            evs = evs + node.events
            if node.fork is None:
                yield Branch(
                    dict(choices),
                    ScheduleMapping(tuple(merge_segments(segs)), self.horizon),
                    evs,
                    node.status,
                    list(forks),
                )
                continue
            task, occ, t = node.fork
            for block, child in reversed(list(node.children.items())):
                c = dict(choices)
                c[(task, occ)] = block
                stack.append((child, segs, evs, c, forks + [(task, occ, t, block)]))

    @property
    def branch_count(self):
        if self.fork is None:
            return 1
        return sum(c.branch_count for c in self.children.values())

    @property
    def ok(self):
        return all(b.status == "ok" for b in self.branches())


@dataclass
class Branch:
    choices: dict
    schedule: ScheduleMapping
    events: list
    status: str
    forks: list

    @property
    def ok(self):
        return self.status == "ok"


def explore_tree_schedule(trees, exec_times=None, horizon=None, policy=HALT, max_branches=4096):
    """Run EDF-dyn-min against every reachable combination of choices."""
    graphs = [apply_cdi(g) for g in trees]
    root_sim = _Simulator(graphs, exec_times, horizon, policy)
    root = TreeSchedule(horizon=root_sim.horizon)
    count = itertools.count(1)
    todo = [(root_sim, root)]
    while todo:
        sim, node = todo.pop(0)
        try:
            sim.run()
        except _Fork:
            s = sim.pending_choice()
            q = sim.query(s)
            node.segments, node.events = sim.segments, sim.events
            node.fork = (q.task, q.occurrence, q.time)
            for i, block in enumerate(q.options):
                if i > 0 and next(count) >= max_branches:
                    raise BudgetExceeded(f"more than {max_branches} branches")
                child_sim = sim.clone()
                child_sim._resolve(child_sim.tasks[sim.tasks.index(s)], block)
                child = TreeSchedule(horizon=sim.horizon)
                node.children[block] = child
                todo.append((child_sim, child))
            continue
        node.segments, node.events = sim.segments, sim.events
        node.status = sim.status
    return root


def _step_function(segments, until):
    """Sorted breakpoints and the (task, occurrence) running on each piece."""
    points = {Fraction(0), until}
    for s in segments:
        if s.start < until:
            points.add(s.start)
            points.add(min(s.end, until))
    points = sorted(p for p in points if p <= until)
    pieces = []
    for u, v in zip(points, points[1:]):
        run = None
        for s in segments:
            if s.start <= u < s.end:
                run = (s.task, s.occurrence)
                break
        pieces.append((u, v, run))
    return pieces


def _first_difference(segs_a, segs_b, until):
    fa = _step_function(segs_a, until)
    fb = _step_function(segs_b, until)
    points = sorted({p for u, v, _ in fa + fb for p in (u, v)})
    for u in points:
        if u >= until:
            break
        ra = next((r for a, b, r in fa if a <= u < b), None)
        rb = next((r for a, b, r in fb if a <= u < b), None)
        if ra != rb:
            return u
    return None


def check_prefix_coincidence(ts):
    """Pairs of branches must agree strictly before their first differing choice."""
    branches = list(ts.branches())
    out = []
    for i, j in itertools.combinations(range(len(branches)), 2):
        a, b = branches[i], branches[j]
        tau = None
        for fa, fb in zip(a.forks, b.forks):
            if fa != fb:
                tau = fa[2]
                break
        if tau is None:
            continue
        diffs = []
        t = _first_difference(list(a.schedule.segments), list(b.schedule.segments), tau)
        if t is not None:
            diffs.append(t)
        ea = [e for e in a.events if e.time < tau]
        eb = [e for e in b.events if e.time < tau]
        if ea != eb:
            k = next((k for k, (x, y) in enumerate(zip(ea, eb)) if x != y), min(len(ea), len(eb)))
            diffs.append((ea + eb)[k].time if k >= len(ea) else ea[k].time)
        if diffs:
            out.append(Violation("PrefixDivergence", (min(diffs),)))
    return out


# -- checkers ------------------------------------------------------------------------


def _occurrence_index(chains):
    """Map (task, occurrence) to (chain, arc position, arc)."""
    index = {}
    for c in chains:
        path = ()
        for pos, a in enumerate(c.arcs):
            path = path + (a.block,)
            index[(c.name, path)] = (c, pos, a)
    return index


def _chain_order(chain):
    arcs = []
    n = chain.initial
    while True:
        outs = chain.out_arcs(n)
        if not outs:
            return arcs
        arcs.append(outs[0])
        n = outs[0].dst


def _normalize_chains(chains):
    out = []
    for c in chains:
        if c.labeling is not Labeling.ABSOLUTE:
            raise NotAbsolute(f"{c.name} must use absolute labeling")
        ordered = _chain_order(c)
        out.append(replace(c, arcs=tuple(ordered)))
    return out


def validate_schedule(chains, schedule):
    """Violations of window, ordering and exclusivity conditions (empty if valid)."""
    chains = _normalize_chains(chains)
    index = _occurrence_index(chains)
    windows = {}
    out = []
    placed = []
    for seg in schedule.segments:
        key = (seg.task, tuple(seg.occurrence))
        if key not in index:
            out.append(Violation("UnknownBlock", (seg.task, "/".join(seg.occurrence))))
            continue
        chain, pos, arc = index[key]
        if (chain.name, arc.id) not in windows:
            start, deadlines = implicit_window(chain, arc.id)
            windows[(chain.name, arc.id)] = (start, min(deadlines))
        start, deadline = windows[(chain.name, arc.id)]
        if seg.start < start:
            out.append(Violation("StartBeforeAfterDate", (arc.label, start)))
        if seg.end > deadline:
            out.append(Violation("EndAfterBeforeDate", (arc.label, deadline)))
        placed.append((seg, chain.name, pos, arc))
    by_task = {}
    for seg, task, pos, arc in placed:
        by_task.setdefault(task, []).append((pos, seg, arc))
    for task, items in by_task.items():
        items.sort(key=lambda x: x[0])
        for (p1, s1, a1), (p2, s2, a2) in itertools.combinations(items, 2):
            if p1 < p2 and s1.end > s2.start:
                out.append(Violation("OutOfOrder", (a1.label, a2.label)))
    ordered = sorted(schedule.segments, key=lambda s: (s.start, s.end))
    for s1, s2 in zip(ordered, ordered[1:]):
        if s2.start < s1.end:
            out.append(Violation("Overlap", (str(s1), str(s2))))
    return out


def check_correct(chains, schedule, exec_times=None):
    """Blocks whose window closes within the horizon must get their cost."""
    chains = _normalize_chains(chains)
    exec_times = exec_times or {}
    out = []
    alloc = {}
    for seg in schedule.segments:
        key = (seg.task, tuple(seg.occurrence))
        alloc[key] = alloc.get(key, Fraction(0)) + seg.duration
    for c in chains:
        path = ()
        for a in c.arcs:
            path = path + (a.block,)
            start, deadlines = implicit_window(c, a.id)
            deadline = min(deadlines)
            if deadline > schedule.horizon:
                continue
            need = Fraction(exec_times.get(a.block, a.cost))
            got = alloc.get((c.name, path), Fraction(0))
            if start > deadline:
                out.append(Violation("EmptyWindow", (a.label, start, deadline)))
            elif got < need:
                out.append(Violation("Underallocated", (a.label, got, need)))
    return out


def check_edf_trace(chains, schedule, exec_times=None):
    """Check a miss-free schedule against the EDF-dyn decision rule.

    On every piece of the schedule the running task must have a minimal
    current deadline among released, incomplete tasks, and the processor
    may only idle when no such task exists.
    """
    chains = _normalize_chains(chains)
    exec_times = exec_times or {}
    info = {}
    points = {Fraction(0), schedule.horizon}
    for c in chains:
        rows = []
        path = ()
        for a in c.arcs:
            path = path + (a.block,)
            start, deadlines = implicit_window(c, a.id)
            rows.append((path, start, min(deadlines), Fraction(exec_times.get(a.block, a.cost))))
            points.add(start)
        info[c.name] = rows
    for s in schedule.segments:
        points.update((s.start, s.end))
    points = sorted(p for p in points if p <= schedule.horizon)
    out = []
    for u, v in zip(points, points[1:]):
        candidates = []
        for task, rows in info.items():
            done = Fraction(0)
            for path, start, deadline, cost in rows:
                got = sum(
                    (min(s.end, u) - s.start for s in schedule.segments
                     if s.task == task and s.occurrence == path and s.start < u),
                    Fraction(0),
                )
                if got >= cost and (cost > 0 or start <= u):
                    continue
                if start <= u:
                    candidates.append((deadline, task, path))
                break
        running = schedule.running_at(u)
        if running is None:
            if candidates:
                out.append(Violation("IdleWhileReady", (u, candidates[0][1])))
            continue
        mine = [c for c in candidates if c[1] == running.task]
        if not mine or mine[0][2] != running.occurrence:
            out.append(Violation("NotCurrentBlock", (u, running.task, running.block)))
            continue
        best = min(c[0] for c in candidates)
        if mine[0][0] > best:
            out.append(Violation("NotEarliestDeadline", (u, running.task, mine[0][0], best)))
    return out


def executed_chains(graphs, result_choices, horizon):
    """Absolute chains followed by a run, given the choices it took.

    Relative or cyclic graphs are unfolded up to ``horizon`` first. Choices
    not reached by the run default to the first branch.
    """
    from .transform import extract_chains, unfold

    trees = []
    for g in graphs:
        if g.labeling is Labeling.RELATIVE or classify(g) is GraphClass.AUTOMATON:
            trees.append(unfold(g, horizon))
        else:
            trees.append(g)
    choices = dict(result_choices)
    for tree in trees:
        stack = [(tree.initial, ())]
        while stack:
            n, path = stack.pop()
            outs = tree.out_arcs(n)
            if len(outs) >= 2:
                key = (tree.name, path)
                choices.setdefault(key, outs[0].block)
                outs = [a for a in outs if a.block == choices[key]]
            for a in outs:
                stack.append((a.dst, path + (a.block,)))
    return extract_chains(trees, choices)
