import pytest

from tca.comms import (
    CommLink,
    Endpoint,
    HorizonTooSmall,
    UnknownArc,
    check_visibility,
    occurrences,
    paired_segments,
)
from tca.core import after, before, build_chain, plain
from tca.fixtures import choice_tree
from tca.psic import compile_program
from tca.scheduler import edf_dyn, edf_dyn_min, explore_tree_schedule

LINK = CommLink(Endpoint("snd", "s"), Endpoint("rcv", "r"), 3)


def sender(deadline=3):
    last = before("s1", deadline) if deadline is not None else plain("s1")
    return build_chain([after("s0", 0), ("s", 1), last], name="snd")


def receiver(release=3):
    return build_chain([after("r0", release), ("r", 1), before("r1", 6)], name="rcv")


PERIODIC_PAIR = (
    "agent p { loop { after(4); work(s, 1); before(2); } }\n"
    "agent q { after(2); loop { after(4); work(r, 1); before(4); } }\n"
)


def test_synchronized_pair_is_accepted():
    report = check_visibility(LINK, [sender(), receiver()], 8)
    assert report.accepted and report.diagnostics == []
    assert [(p.index, p.visibility) for p in report.pairs] == [(0, 3)]


def test_early_receiver_is_rejected():
    bad = check_visibility(LINK, [sender(), receiver(release=2)], 8).first_violation
    assert bad.reason == "receiver may start at 2 < 3"


def test_unbounded_sender_is_rejected():
    bad = check_visibility(LINK, {"snd": sender(None), "rcv": receiver()}, 8).first_violation
    assert "no bounding before" in bad.reason


def test_late_sender_is_rejected():
    report = check_visibility(LINK, [sender(4), receiver(4)], 8)
    assert not report.accepted
    assert report.first_violation.reason == "sender may end at 4 > 3"


def test_unknown_endpoints():
    with pytest.raises(UnknownArc):
        check_visibility(CommLink(Endpoint("snd", "zz"), Endpoint("rcv", "r"), 3), [sender(), receiver()], 8)
    with pytest.raises(UnknownArc):
        check_visibility(CommLink(Endpoint("who", "s"), Endpoint("rcv", "r"), 3), [sender(), receiver()], 8)


def test_link_needs_two_agents():
    with pytest.raises(ValueError):
        CommLink(Endpoint("a", "x"), Endpoint("a", "y"), 1)


def test_horizon_must_reach_a_complete_occurrence():
    progs = compile_program(PERIODIC_PAIR)
    link = CommLink(Endpoint("p", "s"), Endpoint("q", "r"), 2)
    with pytest.raises(HorizonTooSmall):
        check_visibility(link, [c.graph for c in progs], 3)


def test_periodic_pair_counts_from_each_cycle():
    graphs = [c.graph for c in compile_program(PERIODIC_PAIR)]
    link = CommLink(Endpoint("p", "s"), Endpoint("q", "r"), 2)
    report = check_visibility(link, graphs, 16)
    assert report.accepted
    assert [p.visibility for p in report.pairs] == [6, 10, 14]
    assert report.diagnostics == ["OccurrenceCountMismatch: 4 sender vs 3 receiver occurrences"]
    run = edf_dyn_min(graphs, horizon=16)
    assert [(e, s) for _, e, s in paired_segments(run.schedule, link, report)] == [(5, 6), (9, 10), (13, 14)]


def test_occurrences_in_a_tree_follow_paths():
    occ = occurrences(choice_tree(), "a")
    assert [(o.index, o.path, o.start, o.deadline) for o in occ] == [(0, ("a",), 0, 7)]


def test_a_choice_may_leave_the_sender_unbounded():
    tree = choice_tree()
    receiver_late = build_chain([after("r0", 7), ("r", 1), before("r1", 9)], name="rcv")
    link = CommLink(Endpoint("f9", "a"), Endpoint("rcv", "r"), 6)
    report = check_visibility(link, [tree, receiver_late], 10)
    # the branch through c only forces a to end by 7
    assert not report.accepted
    assert "sender may end at 7 > 6" in report.first_violation.reason


def test_accepted_links_hold_in_every_branch():
    snd = build_chain([after("s0", 0), ("s", 2), before("s1", 4)], name="snd")
    tree = choice_tree()
    rcv = build_chain([after("r0", 4), ("r", 1), before("r1", 8)], name="rcv")
    link = CommLink(Endpoint("snd", "s"), Endpoint("rcv", "r"), 4)
    report = check_visibility(link, [snd, rcv, tree], 10)
    assert report.accepted
    for branch in explore_tree_schedule([snd, rcv, tree], horizon=10).branches():
        for _, end, start in paired_segments(branch.schedule, link, report):
            assert end <= start
    plain_run = edf_dyn([snd, rcv], horizon=10)
    assert all(e <= s for _, e, s in paired_segments(plain_run.schedule, link, report))
