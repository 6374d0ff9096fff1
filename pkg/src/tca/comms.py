"""Visibility dates for deterministic communication between agents.

A sender block writes, a receiver block reads. If every occurrence of the
sender is forced to end by the visibility date and every occurrence of the
receiver is forced to start after it, then any valid schedule delivers the
same data to the receiver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import INF, GraphClass, Labeling, as_time, classify, deadline_bound, implicit_start
from .errors import TcaError
from .transform import unfold


class UnknownArc(TcaError):
    pass


class HorizonTooSmall(TcaError):
    pass


@dataclass(frozen=True)
class Endpoint:
    agent: str
    block: str


@dataclass(frozen=True)
class CommLink:
    sender: Endpoint
    receiver: Endpoint
    visibility: Fraction

    def __post_init__(self):
        if self.sender.agent == self.receiver.agent:
            raise ValueError("sender and receiver must belong to different agents")
        object.__setattr__(self, "visibility", as_time(self.visibility))


@dataclass(frozen=True)
class Occurrence:
    index: int
    path: tuple
    start: Fraction
    deadline: object
    """Latest per-path deadline, INF if some path has none, None if every path is cut."""


@dataclass(frozen=True)
class PairVerdict:
    index: int
    visibility: Fraction
    sender: tuple
    receiver: tuple
    ok: bool
    reason: str = ""


@dataclass
class VisibilityReport:
    link: CommLink
    pairs: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def accepted(self):
        return bool(self.pairs) and all(p.ok for p in self.pairs)

    @property
    def first_violation(self):
        return next((p for p in self.pairs if not p.ok), None)


def _tree(graph, horizon):
    if graph.labeling is Labeling.RELATIVE or classify(graph) is GraphClass.AUTOMATON:
        return unfold(graph, horizon), True
    return graph, False


def _latest_deadline(tree, node_id):
    """Max over paths from ``node_id`` of the first deadline met, skipping cut paths."""
    worst = None
    stack = [node_id]
    while stack:
        n = stack.pop()
        node = tree.node(n)
        d = deadline_bound(node)
        if d is not INF:
            worst = d if worst is None or worst is INF else max(worst, d)
            continue
        if node.frontier:
            continue
        outs = tree.out_arcs(n)
        if not outs:
            worst = INF
            continue
        stack.extend(a.dst for a in outs)
    return worst


def occurrences(tree, block):
    """Occurrences of ``block`` numbered by how often it ran before on the path."""
    out = []
    stack = [(tree.initial, (), 0)]
    while stack:
        n, path, count = stack.pop()
        for a in tree.out_arcs(n):
            p = path + (a.block,)
            if a.block == block:
                out.append(
                    Occurrence(count, p, implicit_start(tree, a.id), _latest_deadline(tree, a.dst))
                )
                stack.append((a.dst, p, count + 1))
            else:
                stack.append((a.dst, p, count))
    return sorted(out, key=lambda o: (o.index, o.path))


def _lookup(graphs, endpoint):
    graph = graphs.get(endpoint.agent)
    if graph is None:
        raise UnknownArc(f"no agent {endpoint.agent!r}")
    if not any(a.block == endpoint.block or a.id == endpoint.block for a in graph.arcs):
        raise UnknownArc(f"agent {endpoint.agent!r} has no block {endpoint.block!r}")
    return graph


def check_visibility(link, graphs, horizon):
    """Check that ``link``'s visibility date separates sender from receiver.

    ``graphs`` maps agent names to graphs (a list is accepted too). Cyclic
    graphs are unfolded to ``horizon``; their k-th sender occurrence is
    paired with the k-th receiver occurrence and the visibility date is
    counted from the start of the sender occurrence's cycle.
    """
    if not isinstance(graphs, dict):
        graphs = {g.name: g for g in graphs}
    sg = _lookup(graphs, link.sender)
    rg = _lookup(graphs, link.receiver)
    stree, s_cyclic = _tree(sg, horizon)
    rtree, r_cyclic = _tree(rg, horizon)
    sblock = next(a.block for a in sg.arcs if a.block == link.sender.block or a.id == link.sender.block)
    rblock = next(a.block for a in rg.arcs if a.block == link.receiver.block or a.id == link.receiver.block)
    sends = [o for o in occurrences(stree, sblock) if o.deadline is not None]
    recvs = occurrences(rtree, rblock)
    if not sends or not recvs:
        raise HorizonTooSmall(f"no complete occurrence of the link within horizon {horizon}")
    report = VisibilityReport(link)
    s_idx = {o.index for o in sends}
    r_idx = {o.index for o in recvs}
    if s_idx != r_idx:
        report.diagnostics.append(
            f"OccurrenceCountMismatch: {len(s_idx)} sender vs {len(r_idx)} receiver occurrences"
        )
    cyclic = s_cyclic or r_cyclic
    for k in sorted(s_idx & r_idx):
        for s in (o for o in sends if o.index == k):
            v = s.start + link.visibility if cyclic else link.visibility
            for r in (o for o in recvs if o.index == k):
                reasons = []
                if s.deadline is INF:
                    reasons.append("sender has no bounding before node")
                elif s.deadline > v:
                    reasons.append(f"sender may end at {s.deadline} > {v}")
                if r.start < v:
                    reasons.append(f"receiver may start at {r.start} < {v}")
                report.pairs.append(PairVerdict(k, v, s.path, r.path, not reasons, "; ".join(reasons)))
    return report


def paired_segments(schedule, link, report):
    """For each checked pair: (sender's last segment end, receiver's first segment start)."""
    out = []
    for p in report.pairs:
        s_end = max(
            (seg.end for seg in schedule.segments if seg.task == link.sender.agent and seg.occurrence == p.sender),
            default=None,
        )
        r_start = min(
            (seg.start for seg in schedule.segments if seg.task == link.receiver.agent and seg.occurrence == p.receiver),
            default=None,
        )
        out.append((p, s_end, r_start))
    return out
