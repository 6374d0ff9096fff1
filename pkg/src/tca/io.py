"""JSON documents for graphs, schedules, verdicts and link manifests.

All times are strings holding an integer or ``p/q`` so they round-trip
exactly; an unbounded deadline is the string ``"inf"``.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .comms import CommLink, Endpoint
from .core import INF, Arc, Kind, Labeling, Node, TcaGraph, as_time, format_time
from .errors import TcaError
from .scheduler import Event, ScheduleMapping, Segment, ScriptedOracle

FORMAT_VERSION = 1


class FormatError(TcaError):
    """A document does not follow its schema."""


def _time(value, what, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise FormatError(f"{what}: expected a rational string, got {value!r}")
    try:
        t = as_time(value)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: {exc}") from None
    if t is INF and not allow_inf:
        raise FormatError(f"{what}: infinity is not allowed here")
    return t


def _field(doc, key, what):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise FormatError(f"{what}: missing field {key!r}") from None


def dumps(doc):
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- graphs


def graph_to_dict(graph):
    nodes = []
    for n in graph.nodes:
        d = {"id": n.id, "kind": n.kind.value}
        if n.date is not None:
            d["date"] = format_time(n.date)
        if n.inherited_deadline is not None:
            d["inherited_deadline"] = format_time(n.inherited_deadline)
        if n.origin is not None:
            d["origin"] = n.origin
        if n.frontier:
            d["frontier"] = True
        nodes.append(d)
    arcs = []
    for a in graph.arcs:
        d = {"id": a.id, "from": a.src, "to": a.dst, "block": {"name": a.label, "cost": format_time(a.cost)}}
        if a.origin is not None:
            d["origin"] = a.origin
        arcs.append(d)
    return {
        "format": "tca-graph",
        "version": FORMAT_VERSION,
        "name": graph.name,
        "labeling": graph.labeling.value,
        "initial": graph.initial,
        "nodes": nodes,
        "arcs": arcs,
    }


def graph_from_dict(doc, name=None):
    what = "graph"
    try:
        labeling = Labeling(_field(doc, "labeling", what))
    except ValueError:
        raise FormatError(f"{what}: labeling must be 'relative' or 'absolute'") from None
    nodes = []
    for i, nd in enumerate(_field(doc, "nodes", what)):
        w = f"node #{i}"
        try:
            kind = Kind(_field(nd, "kind", w))
        except ValueError:
            raise FormatError(f"{w}: unknown kind {nd.get('kind')!r}") from None
        date = None
        if kind is not Kind.PLAIN:
            date = _time(_field(nd, "date", w), f"{w} date", allow_inf=kind is Kind.BEFORE)
        elif "date" in nd:
            raise FormatError(f"{w}: a plain node has no date")
        inherited = None
        if nd.get("inherited_deadline") is not None:
            inherited = _time(nd["inherited_deadline"], f"{w} inherited_deadline")
        nodes.append(Node(str(_field(nd, "id", w)), kind, date, inherited, nd.get("origin"), bool(nd.get("frontier", False))))
    arcs = []
    for i, ad in enumerate(_field(doc, "arcs", what)):
        w = f"arc #{i}"
        block = _field(ad, "block", w)
        arcs.append(
            Arc(
                str(_field(ad, "id", w)),
                str(_field(ad, "from", w)),
                str(_field(ad, "to", w)),
                str(block.get("name", "")) if isinstance(block, dict) else "",
                _time(_field(block, "cost", w), f"{w} cost"),
                ad.get("origin"),
            )
        )
    return TcaGraph(tuple(nodes), tuple(arcs), str(_field(doc, "initial", what)), labeling, doc.get("name") or name or "task")


def dump_graph(graph):
    return dumps(graph_to_dict(graph))


def load_graph(text, name=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not JSON: {exc}") from None
    return graph_from_dict(doc, name)


# -- schedules


def _value(v):
    if v is INF or isinstance(v, Fraction):
        return format_time(v)
    return v


def segment_to_dict(s):
    return {
        "task": s.task,
        "occurrence": list(s.occurrence),
        "block": s.block,
        "start": format_time(s.start),
        "end": format_time(s.end),
    }


def event_to_dict(e):
    details = {}
    if e.value is not None:
        details["value"] = _value(e.value)
    if e.note:
        details["note"] = e.note
    return {
        "time": format_time(e.time),
        "kind": e.kind,
        "task": e.task,
        "occurrence": list(e.occurrence),
        "details": details,
    }


def _choices_to_list(choices):
    return [
        {"task": task, "occurrence": list(occ), "block": block}
        for (task, occ), block in sorted(choices.items())
    ]


def schedule_to_dict(result, markers=None, branches=None):
    """Document for a :class:`SimulationResult`, or for explored branches."""
    doc = {"format": "tca-schedule", "version": FORMAT_VERSION}
    if branches is not None:
        statuses = [b.status for b in branches]
        doc["status"] = "ok" if all(s == "ok" for s in statuses) else "deadline-miss"
        doc["horizon"] = format_time(branches[0].schedule.horizon) if branches else "0"
        doc["branches"] = [
            {
                "choices": _choices_to_list(b.choices),
                "status": b.status,
                "segments": [segment_to_dict(s) for s in b.schedule.segments],
                "events": [event_to_dict(e) for e in b.events],
            }
            for b in branches
        ]
    else:
        doc["status"] = result.status
        doc["horizon"] = format_time(result.schedule.horizon)
        doc["segments"] = [segment_to_dict(s) for s in result.schedule.segments]
        doc["events"] = [event_to_dict(e) for e in result.events]
        doc["choices"] = _choices_to_list(result.choices)
    if markers is not None:
        doc["markers"] = [
            {"task": task, "kind": kind, "time": format_time(t)} for task, kind, t in markers
        ]
    return doc


def segment_from_dict(d):
    w = "segment"
    return Segment(
        str(_field(d, "task", w)),
        tuple(_field(d, "occurrence", w)),
        str(_field(d, "block", w)),
        _time(_field(d, "start", w), "segment start"),
        _time(_field(d, "end", w), "segment end"),
    )


def event_from_dict(d):
    w = "event"
    details = d.get("details", {}) or {}
    value = details.get("value")
    if isinstance(value, str):
        try:
            value = as_time(value)
        except (TypeError, ValueError):
            pass
    return Event(
        _time(_field(d, "time", w), "event time"),
        str(_field(d, "kind", w)),
        str(_field(d, "task", w)),
        tuple(d.get("occurrence", ())),
        value,
        details.get("note", ""),
    )


def load_schedule(text):
    """Returns ``(doc, [(label, ScheduleMapping, events, choices), ...])``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not JSON: {exc}") from None
    horizon = _time(_field(doc, "horizon", "schedule"), "horizon")

    def parse_choices(items):
        return {(c["task"], tuple(c["occurrence"])): c["block"] for c in items or []}

    runs = []
    if "branches" in doc:
        for i, b in enumerate(doc["branches"]):
            segs = tuple(segment_from_dict(s) for s in b.get("segments", []))
            runs.append((f"branch {i}", ScheduleMapping(segs, horizon), [event_from_dict(e) for e in b.get("events", [])], parse_choices(b.get("choices"))))
    else:
        segs = tuple(segment_from_dict(s) for s in _field(doc, "segments", "schedule"))
        runs.append(("schedule", ScheduleMapping(segs, horizon), [event_from_dict(e) for e in doc.get("events", [])], parse_choices(doc.get("choices"))))
    return doc, runs


# -- verdicts


def verdict_to_dict(verdict):
    doc = {"feasible": verdict.feasible}
    w = verdict.witness
    if w is not None:
        if isinstance(w, ScheduleMapping):
            doc["witness"] = {"segments": [segment_to_dict(s) for s in w.segments]}
        else:
            doc["witness"] = {
                "branches": [
                    {"choices": _choices_to_list(b.choices), "segments": [segment_to_dict(s) for s in b.schedule.segments]}
                    for b in w.branches()
                ]
            }
    if verdict.certificate is not None:
        doc["certificate"] = {k: _value(v) for k, v in verdict.certificate.items()}
    doc["stats"] = dict(verdict.stats)
    return doc


# -- choice scripts and link manifests


def parse_choice_script(text):
    """Lines ``agent k branch`` (k-th choice of agent takes branch), ``default n``, ``#`` comments."""
    script = {}
    default = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "default" and len(parts) == 2:
                default = int(parts[1])
                if default < 0:
                    raise ValueError
                continue
            if len(parts) != 3:
                raise ValueError
            agent, k, branch = parts[0], int(parts[1]), int(parts[2])
            if k < 0 or branch < 0:
                raise ValueError
        except ValueError:
            raise FormatError(f"choice script line {lineno}: expected 'agent index branch' or 'default n'") from None
        if (agent, k) in script:
            raise FormatError(f"choice script line {lineno}: choice {k} of {agent} given twice")
        script[(agent, k)] = branch
    return ScriptedOracle(script, default)


def load_links(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not JSON: {exc}") from None
    items = doc if isinstance(doc, list) else doc.get("links", [doc]) if isinstance(doc, dict) else None
    if items is None:
        raise FormatError("link manifest must be an object or a list")
    links = []
    for i, d in enumerate(items):
        w = f"link #{i}"
        s, r = _field(d, "sender", w), _field(d, "receiver", w)
        links.append(
            CommLink(
                Endpoint(str(_field(s, "agent", w)), str(_field(s, "block", w))),
                Endpoint(str(_field(r, "agent", w)), str(_field(r, "block", w))),
                _time(_field(d, "visibility", w), f"{w} visibility"),
            )
        )
    return links
