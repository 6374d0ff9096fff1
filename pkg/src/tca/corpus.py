"""Seeded random instances for property tests and corpus runs."""

from __future__ import annotations

import random
from fractions import Fraction

from .core import Arc, Labeling, TcaGraph, after, before, build_chain, plain, sync
from .errors import ImpossibleConstraints
from .transform import simplify


def _random_node(rng, node_id, base, horizon, root=False):
    """A node whose date is drawn near the current time base."""
    roll = rng.random()
    if root:
        return after(node_id, rng.randint(0, max(0, horizon // 3))) if roll < 0.8 else plain(node_id)
    if roll < 0.35:
        return plain(node_id)
    if roll < 0.6:
        return after(node_id, min(horizon, base + rng.randint(0, 3)))
    if roll < 0.9:
        return before(node_id, min(horizon, base + rng.randint(1, 6)))
    return sync(node_id, min(horizon, base + rng.randint(1, 4)))


def random_chain(rng, name, horizon, max_blocks=3, max_cost=4):
    """An absolute chain of 1..max_blocks blocks with integer data, not simplified."""
    nodes = [_random_node(rng, f"{name}n0", 0, horizon, root=True)]
    arcs = []
    base = nodes[0].date or 0
    for i in range(rng.randint(1, max_blocks)):
        node = _random_node(rng, f"{name}n{i + 1}", base, horizon)
        if node.release is not None:
            base = max(base, node.release)
        block = f"{name}{'abcdefgh'[i]}"
        arcs.append(Arc(block, nodes[-1].id, node.id, block, Fraction(rng.randint(0, max_cost))))
        nodes.append(node)
    return TcaGraph(tuple(nodes), tuple(arcs), nodes[0].id, Labeling.ABSOLUTE, name)


def random_tree(rng, name, horizon, max_choices=2, max_arcs=6, max_cost=3):
    """An absolute tree with at most ``max_choices`` binary choice nodes."""
    root = _random_node(rng, f"{name}n0", 0, horizon, root=True)
    nodes = [root]
    arcs = []
    choices = 0
    frontier = [(root.id, root.date or 0, 0)]
    while frontier and len(arcs) < max_arcs:
        src, base, depth = frontier.pop(0)
        if depth >= 3:
            continue
        fanout = 1
        if choices < max_choices and depth >= 0 and rng.random() < 0.45 and len(arcs) + 2 <= max_arcs:
            fanout = 2
            choices += 1
        elif depth > 0 and rng.random() < 0.25:
            continue
        for _ in range(fanout):
            k = len(nodes)
            node = _random_node(rng, f"{name}n{k}", base, horizon)
            nbase = max(base, node.release) if node.release is not None else base
            block = f"{name}{len(arcs)}"
            arcs.append(Arc(block, src, node.id, block, Fraction(rng.randint(0, max_cost))))
            nodes.append(node)
            frontier.append((node.id, nbase, depth + 1))
    return TcaGraph(tuple(nodes), tuple(arcs), root.id, Labeling.ABSOLUTE, name)


def _simplified(make, rng, tries=50):
    for _ in range(tries):
        graphs = make()
        try:
            return [simplify(g) for g in graphs]
        except ImpossibleConstraints:
            continue
    raise RuntimeError("could not draw a satisfiable instance")


def chain_instance(seed, max_tasks=3, max_horizon=16, max_cost=4, simplified=True):
    """``(chains, horizon)`` for one seed; chains are simplified unless asked otherwise."""
    rng = random.Random(seed)
    horizon = rng.randint(4, max_horizon)
    tasks = rng.randint(1, max_tasks)

    def make():
        return [random_chain(rng, f"t{i}", horizon, max_cost=max_cost) for i in range(tasks)]

    if not simplified:
        return make(), horizon
    return _simplified(make, rng), horizon


def tree_instance(seed, max_trees=2, max_horizon=12, max_choices=2):
    """``(trees, horizon)``: simplified trees sharing at most ``max_choices`` choice nodes."""
    rng = random.Random(seed)
    horizon = rng.randint(4, max_horizon)
    count = rng.randint(1, max_trees)

    def make():
        budget = max_choices
        out = []
        for i in range(count):
            g = random_tree(rng, f"u{i}", horizon, max_choices=budget)
            budget -= sum(1 for n in g.nodes if g.is_choice(n.id))
            out.append(g)
        return out

    return _simplified(make, rng), horizon


def link_instance(seed, max_horizon=14):
    """``(graphs, link, horizon)``: a sender chain, a receiver chain and a third tree.

    Dates are drawn around a visibility date so that roughly half of the
    links are accepted; the tree competes for the processor.
    """
    from .comms import CommLink, Endpoint

    rng = random.Random(seed)
    horizon = rng.randint(8, max_horizon)
    v = rng.randint(3, horizon - 4)

    def make():
        cost = rng.randint(1, 2)
        start = rng.randint(0, max(0, v - cost - 1))
        end = v + rng.choice([0, 0, 0, -1, 1])
        snd = [after("sn0", start), ("s", cost), before("sn1", end)]
        if rng.random() < 0.5:
            snd += [("stail", rng.randint(0, 2)), before("sn2", min(horizon, end + rng.randint(2, 4)))]
        release = v + rng.choice([0, 0, 1, -1])
        rcv = [after("rn0", release), ("r", rng.randint(1, 2)), before("rn1", min(horizon, release + rng.randint(2, 5)))]
        return [
            build_chain(snd, name="snd"),
            build_chain(rcv, name="rcv"),
            random_tree(rng, "other", horizon, max_choices=1, max_arcs=4, max_cost=2),
        ]

    graphs = _simplified(make, rng)
    return graphs, CommLink(Endpoint("snd", "s"), Endpoint("rcv", "r"), v), horizon
