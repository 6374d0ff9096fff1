"""Command-line interface: ``tca <subcommand> ...``.

Exit status is 0 on success, 1 when violations, deadline misses or
infeasibility are reported, and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from . import io as tio
from .comms import check_visibility
from .corpus import chain_instance, tree_instance
from .core import GraphClass, Labeling, as_time, classify, format_time, validate_graph
from .errors import InvalidGraph, TcaError, ZenoCycle
from .feasibility import DEFAULT_BUDGET, feasible_chains, feasible_trees
from .gantt import render_svg, render_text
from .psic import CompileError, SourceError, compile_program, format_diagnostic, parse, tokenize
from .scheduler import (
    HALT,
    RECORD,
    ChoiceScriptError,
    check_correct,
    edf_dyn,
    edf_dyn_min,
    executed_chains,
    explore_tree_schedule,
    first_branch,
    validate_schedule,
)
from .transform import apply_cdi, simplify, unfold


class UsageError(Exception):
    pass


def _horizon(text):
    try:
        h = as_time(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"invalid horizon {text!r} (use an integer or p/q)")
    if h is not None and (h <= 0 or str(h) == "inf"):
        raise argparse.ArgumentTypeError("horizon must be positive and finite")
    return h


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_graph(path, check=True):
    name = os.path.splitext(os.path.basename(path))[0]
    graph = tio.load_graph(_read(path), name)
    if check:
        problems = validate_graph(graph)
        if problems:
            raise InvalidGraph(problems)
    return graph


def _load_graphs(paths):
    graphs = [_load_graph(p) for p in paths]
    names = [g.name for g in graphs]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise UsageError(f"duplicate task names: {', '.join(sorted(dup))}")
    return graphs


def _all_chains(graphs):
    return all(g.labeling is Labeling.ABSOLUTE and classify(g) is GraphClass.CHAIN for g in graphs)


def _markers(chains, horizon):
    """Constraint dates of the executed chains, for Gantt charts."""
    out = []
    for c in chains:
        for n in c.nodes:
            if n.date is None or n.frontier or n.date > horizon:
                continue
            out.append((c.name, n.kind.value, n.date))
    return sorted(set(out), key=lambda m: (m[0], m[2], m[1]))


# -- subcommands


def cmd_compile(args):
    source = _read(args.file)
    try:
        agents = compile_program(parse(tokenize(source)))
    except SourceError as err:
        print(format_diagnostic(err, source, args.file), file=sys.stderr)
        return 1 if isinstance(err, CompileError) else 2
    os.makedirs(args.output, exist_ok=True)
    for agent in agents:
        path = os.path.join(args.output, f"{agent.name}.tca")
        _write(path, tio.dump_graph(agent.graph))
        print(path)
    return 0


def cmd_simplify(args):
    _write(args.output, tio.dump_graph(simplify(_load_graph(args.graph))))
    return 0


def cmd_unfold(args):
    _write(args.output, tio.dump_graph(unfold(_load_graph(args.graph), args.horizon)))
    return 0


def cmd_cdi(args):
    _write(args.output, tio.dump_graph(apply_cdi(_load_graph(args.graph))))
    return 0


def cmd_schedule(args):
    graphs = [tio.load_graph(_read(p), os.path.splitext(os.path.basename(p))[0]) for p in args.graphs]
    for g in graphs:
        problems = validate_graph(g)
        if problems and all(v.kind == "ZenoCycle" for v in problems):
            doc = {"format": "tca-schedule", "version": tio.FORMAT_VERSION, "status": "zeno",
                   "horizon": format_time(args.horizon), "segments": [], "events": [],
                   "diagnostics": [str(v) for v in problems]}
            _write(args.output, tio.dumps(doc))
            print(f"{g.name}: cycle lets no time pass", file=sys.stderr)
            return 1
        if problems:
            raise InvalidGraph(problems)
    if args.choices_all:
        trees = [
            unfold(g, args.horizon) if g.labeling is Labeling.RELATIVE or classify(g) is GraphClass.AUTOMATON else g
            for g in graphs
        ]
        ts = explore_tree_schedule(trees, horizon=args.horizon, policy=args.miss_policy, max_branches=args.max_branches)
        branches = list(ts.branches())
        _write(args.output, tio.dumps(tio.schedule_to_dict(None, branches=branches)))
        if args.trace:
            _write(args.trace, "".join(f"branch {i}: {e}\n" for i, b in enumerate(branches) for e in b.events))
        for i, b in enumerate(branches):
            picked = ", ".join(f"{t}@{'/'.join(o)}->{blk}" for (t, o), blk in sorted(b.choices.items())) or "no choice"
            print(f"branch {i}: {b.status} ({picked})", file=sys.stderr)
        return 0 if all(b.ok for b in branches) else 1
    if _all_chains(graphs) and not args.choices:
        result = edf_dyn(graphs, horizon=args.horizon, policy=args.miss_policy)
    else:
        oracle = tio.parse_choice_script(_read(args.choices)) if args.choices else first_branch
        result = edf_dyn_min(graphs, oracle=oracle, horizon=args.horizon, policy=args.miss_policy)
    chains = executed_chains(graphs, result.choices, args.horizon)
    doc = tio.schedule_to_dict(result, markers=_markers(chains, args.horizon))
    _write(args.output, tio.dumps(doc))
    if args.trace:
        _write(args.trace, "".join(f"{e}\n" for e in result.events))
    print(f"status: {result.status}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_validate(args):
    graphs = _load_graphs(args.against)
    _, runs = tio.load_schedule(_read(args.schedule))
    bad = 0
    for label, schedule, events, choices in runs:
        chains = executed_chains(graphs, choices, schedule.horizon)
        problems = validate_schedule(chains, schedule) + check_correct(chains, schedule)
        for v in problems:
            print(f"{label}: {v}")
        bad += len(problems)
        if not problems:
            print(f"{label}: valid and correct")
    return 1 if bad else 0


def cmd_feasible(args):
    graphs = _load_graphs(args.graphs)
    if _all_chains(graphs):
        verdict = feasible_chains(graphs, args.horizon, budget=args.budget)
    else:
        verdict = feasible_trees(graphs, args.horizon, budget=args.budget)
    if args.output:
        _write(args.output, tio.dumps(tio.verdict_to_dict(verdict)))
    line = "feasible" if verdict.feasible else "infeasible"
    cert = verdict.certificate
    if cert:
        line += ": " + ", ".join(f"{k} {tio._value(v)}" for k, v in cert.items() if v is not None)
    print(line)
    return 0 if verdict.feasible else 1


def cmd_gantt(args):
    doc, runs = tio.load_schedule(_read(args.schedule))
    if not 0 <= args.branch < len(runs):
        raise UsageError(f"no branch {args.branch} (schedule has {len(runs)})")
    _, schedule, _, _ = runs[args.branch]
    markers = [(m["task"], m["kind"], as_time(m["time"])) for m in doc.get("markers", [])]
    if args.format == "svg":
        text = render_svg(list(schedule.segments), schedule.horizon, markers, px_per_tick=args.px_per_tick)
    else:
        text = render_text(list(schedule.segments), schedule.horizon, markers)
    _write(args.output, text)
    return 0


def cmd_visibility(args):
    graphs = {g.name: g for g in _load_graphs(args.against)}
    links = tio.load_links(_read(args.links))
    rejected = 0
    for link in links:
        report = check_visibility(link, graphs, args.horizon)
        head = f"{link.sender.agent}.{link.sender.block} -> {link.receiver.agent}.{link.receiver.block} @ {format_time(link.visibility)}"
        print(f"{head}: {'accepted' if report.accepted else 'rejected'}")
        for p in report.pairs:
            mark = "ok" if p.ok else "FAIL " + p.reason
            print(f"  #{p.index} visibility {format_time(p.visibility)} "
                  f"send {'/'.join(p.sender)} recv {'/'.join(p.receiver)}: {mark}")
        for d in report.diagnostics:
            print(f"  {d}")
        rejected += not report.accepted
    return 1 if rejected else 0


def cmd_corpus(args):
    make = chain_instance if args.kind == "chains" else tree_instance
    mismatches = 0
    for seed in range(args.seed, args.seed + args.count):
        graphs, horizon = make(seed)
        line = f"{args.kind} seed {seed}: {len(graphs)} tasks, horizon {horizon}"
        if args.output:
            folder = os.path.join(args.output, f"{args.kind}-{seed}")
            os.makedirs(folder, exist_ok=True)
            for g in graphs:
                _write(os.path.join(folder, f"{g.name}.tca"), tio.dump_graph(g))
        if args.check:
            if args.kind == "chains":
                verdict = bool(feasible_chains(graphs, horizon))
                edf = edf_dyn(graphs, horizon=horizon).ok
            else:
                verdict = bool(feasible_trees(graphs, horizon))
                edf = explore_tree_schedule(graphs, horizon=horizon).ok
            agree = verdict == edf
            mismatches += not agree
            line += f", oracle {'feasible' if verdict else 'infeasible'}, edf {'ok' if edf else 'miss'}"
            line += "" if agree else " MISMATCH"
        print(line)
    if args.check:
        print(f"{args.count - mismatches}/{args.count} agree")
    return 1 if mismatches else 0


def build_parser():
    p = argparse.ArgumentParser(prog="tca", description="Time-constrained automata toolchain.")
    p.add_argument("--version", action="version",
                   version=f"tca {__version__} (graph format {tio.FORMAT_VERSION}, schedule format {tio.FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("compile", help="compile a .psi program, one graph file per agent")
    s.add_argument("file")
    s.add_argument("-o", "--output", default=".", help="output directory")
    s.set_defaults(func=cmd_compile)

    for name, func, helptext in (
        ("simplify", cmd_simplify, "remove redundant constraints, merge sync points"),
        ("cdi", cmd_cdi, "annotate choice nodes with inherited deadlines"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("graph")
        s.add_argument("-o", "--output")
        s.set_defaults(func=func)

    s = sub.add_parser("unfold", help="unfold an automaton into an absolute tree")
    s.add_argument("graph")
    s.add_argument("--horizon", type=_horizon, required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_unfold)

    s = sub.add_parser("schedule", help="simulate EDF-dyn / EDF-dyn-min")
    s.add_argument("graphs", nargs="+")
    s.add_argument("--horizon", type=_horizon, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--choices", help="choice script: lines 'agent index branch', optional 'default n'")
    g.add_argument("--choices-all", action="store_true", help="explore every combination of choices")
    s.add_argument("--max-branches", type=int, default=4096)
    s.add_argument("--miss-policy", choices=[HALT, RECORD], default=HALT)
    s.add_argument("-o", "--output")
    s.add_argument("--trace", help="also write the event trace as text, one event per line")
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("validate", help="check a schedule against its graphs")
    s.add_argument("schedule")
    s.add_argument("--against", nargs="+", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("feasible", help="exhaustive feasibility check (small instances)")
    s.add_argument("graphs", nargs="+")
    s.add_argument("--horizon", type=_horizon, required=True)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="limit on horizon ticks x tasks")
    s.add_argument("-o", "--output", help="write the verdict document here")
    s.set_defaults(func=cmd_feasible)

    s = sub.add_parser("gantt", help="render a schedule")
    s.add_argument("schedule")
    s.add_argument("--format", choices=["text", "svg"], default="text")
    s.add_argument("--px-per-tick", type=int, default=40)
    s.add_argument("--branch", type=int, default=0, help="branch to draw for explored schedules")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gantt)

    s = sub.add_parser("visibility", help="check communication links against visibility dates")
    s.add_argument("links")
    s.add_argument("--against", nargs="+", required=True)
    s.add_argument("--horizon", type=_horizon, required=True)
    s.set_defaults(func=cmd_visibility)

    s = sub.add_parser("corpus", help="generate random instances, optionally checking oracle against EDF")
    s.add_argument("--kind", choices=["chains", "trees"], default="chains")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--check", action="store_true", help="compare the feasibility oracle with the scheduler")
    s.add_argument("-o", "--output", help="directory for the generated graph files")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, TcaError, ChoiceScriptError) as exc:
        print(f"tca {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
