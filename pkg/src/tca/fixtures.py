"""Small reference instances used by the tests, demos and documentation."""

from __future__ import annotations

from .core import Arc, Labeling, TcaGraph, after, before, build_chain, plain, sync


def sync_gap_chain(costs=(1, 2, 1, 2), name="f1"):
    """>1 -a-> >2 -b-> <5 -c-> <>7 -d-> <10, absolute.

    ``a`` starts after 1, ``b`` runs within [2, 5], ``c`` ends by 7 and ``d``
    runs within [7, 10].
    """
    ca, cb, cc, cd = costs
    return build_chain(
        [
            after("n1", 1), ("a", ca),
            after("n2", 2), ("b", cb),
            before("n3", 5), ("c", cc),
            sync("n4", 7), ("d", cd),
            before("n5", 10),
        ],
        name=name,
    )


def sync_gap_chain_relative(costs=(1, 2, 1, 2), name="f1"):
    """The same chain labeled relatively: >1, >1, <3, <>5, <3."""
    ca, cb, cc, cd = costs
    return build_chain(
        [
            after("n1", 1), ("a", ca),
            after("n2", 1), ("b", cb),
            before("n3", 3), ("c", cc),
            sync("n4", 5), ("d", cd),
            before("n5", 3),
        ],
        name=name,
        labeling=Labeling.RELATIVE,
    )


def choice_tree(deadline_b=6, deadline_c=7, name="f9"):
    """>0 -a(2)-> C, then C -b(2)-> <6 or C -c(1)-> <7."""
    nodes = (
        after("r", 0),
        plain("C"),
        before("B", deadline_b),
        before("E", deadline_c),
    )
    arcs = (
        Arc("a", "r", "C", "a", 2),
        Arc("b", "C", "B", "b", 2),
        Arc("c", "C", "E", "c", 1),
    )
    return TcaGraph(nodes, arcs, "r", Labeling.ABSOLUTE, name)


def companion_chain(name="f9d"):
    """>0 -d(1)-> <3."""
    return build_chain([after("s", 0), ("d", 1), before("t", 3)], name=name)


def self_loop(period=2, cost=1, name="loop"):
    """Relative one-node cycle >period -x-> back to itself."""
    return TcaGraph(
        (after("p", period),),
        (Arc("x", "p", "p", "x", cost),),
        "p",
        Labeling.RELATIVE,
        name,
    )


def periodic_task(period=1, cost=1, name="periodic"):
    """Relative one-node cycle <>period -x-> itself: deadline equal to period."""
    return TcaGraph(
        (sync("p", period),),
        (Arc("x", "p", "p", "x", cost),),
        "p",
        Labeling.RELATIVE,
        name,
    )


LOOP_WITH_CHOICE_SOURCE = """\
agent f7 {
  work(a, 1/2);
  loop {
    after(1);
    if choice { work(b, 1/2); before(1); }
    else      { work(c, 1); work(d, 1); work(e, 1); before(5); }
  }
}
"""

PERIODIC_SOURCE = """\
agent p { loop { after(1); work(x, 1/2); before(1); } }
"""

ZENO_SOURCE = """\
agent z { loop { work(x, 1); } }
"""
