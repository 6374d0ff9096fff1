from fractions import Fraction as F

import pytest

from tca.core import after, before, build_chain
from tca.corpus import chain_instance, tree_instance
from tca.errors import BudgetExceeded, TcaError
from tca.fixtures import choice_tree, companion_chain, periodic_task, self_loop, sync_gap_chain
from tca.psic import compile_program
from tca.transform import apply_cdi
from tca.scheduler import (
    RECORD,
    ChoiceScriptError,
    FixedChoices,
    ScheduleMapping,
    ScriptedOracle,
    Segment,
    TreeSchedule,
    check_correct,
    check_edf_trace,
    check_prefix_coincidence,
    default_horizon,
    edf_dyn,
    edf_dyn_min,
    executed_chains,
    explore_tree_schedule,
    first_branch,
    merge_segments,
    validate_schedule,
)

from oracles import chain_rows

F1_ROWS = [("a", 1, 2), ("b", 2, 4), ("c", 4, 5), ("d", 7, 9)]


def f1_schedule(rows=F1_ROWS, horizon=10):
    segs, path = [], ()
    for block, s, e in rows:
        path = path + (block,)
        segs.append(Segment("f1", path, block, F(s), F(e)))
    return ScheduleMapping(tuple(segs), F(horizon))


def texts(segments):
    return [str(s) for s in segments]


def overload(cost=5, deadline=3, name="ov"):
    return build_chain([after("n0", 0), ("x", cost), before("n1", deadline)], name=name)


# -- EDF-dyn on chains


def test_f1_schedule_idles_over_the_sync_gap():
    r = edf_dyn([sync_gap_chain()], horizon=10)
    assert r.ok
    assert texts(r.schedule.segments) == ["f1:a[1,2)", "f1:b[2,4)", "f1:c[4,5)", "f1:d[7,9)"]
    assert r.schedule.running_at(F(6)) is None
    assert [str(e) for e in r.events if e.kind == "Suspend"] == ["0 Suspend f1 @a 1", "5 Suspend f1 @a/b/c/d 7"]


def test_exec_times_override_arc_costs():
    r = edf_dyn([sync_gap_chain()], exec_times={"b": F(1, 2)}, horizon=10)
    assert texts(r.schedule.segments)[1] == "f1:b[2,5/2)"


def test_overload_misses_at_its_deadline():
    r = edf_dyn([overload()], horizon=8)
    assert r.status == "deadline-miss"
    assert [(e.time, e.task, e.occurrence) for e in r.misses] == [(3, "ov", ("x",))]
    assert texts(r.schedule.segments) == ["ov:x[0,3)"]


def test_record_policy_keeps_going_after_a_miss():
    late = build_chain([after("m0", 0), ("y", 1), before("m1", 6)], name="zz")
    r = edf_dyn([overload(), late], horizon=8, policy=RECORD)
    assert r.status == "deadline-miss"
    assert len(r.misses) == 1
    assert "zz:y[3,4)" in texts(r.schedule.segments)


def test_ties_go_to_the_smaller_task_name():
    a = build_chain([after("p0", 0), ("x", 1), before("p1", 4)], name="b_task")
    b = build_chain([after("q0", 0), ("y", 1), before("q1", 4)], name="a_task")
    r = edf_dyn([a, b], horizon=4)
    assert texts(r.schedule.segments) == ["a_task:y[0,1)", "b_task:x[1,2)"]


def test_default_horizon_covers_the_chain():
    assert default_horizon([sync_gap_chain()]) == 10 + 6
    with pytest.raises(ValueError):
        default_horizon([self_loop()])
    assert edf_dyn([sync_gap_chain()]).ok


def test_two_periodic_tasks_with_full_utilization():
    progs = compile_program(
        "agent p { loop { after(2); work(x, 1); before(2); } }\n"
        "agent q { loop { after(4); work(y, 2); before(4); } }\n"
    )
    r = edf_dyn_min([c.graph for c in progs], horizon=12)
    assert r.ok
    # first releases at 2 and 4: five jobs of p and two of q fit before 12
    busy = sum((s.duration for s in r.schedule.segments), F(0))
    assert busy == 5 + 4
    assert r.schedule.running_at(F(3)) is None
    assert r.schedule.running_at(F(11)).task == "q"


def test_periodic_fractional_task_over_one_hyperperiod():
    r = edf_dyn_min([periodic_task(period=F(1), cost=F(1, 2))], horizon=4)
    assert r.ok
    assert texts(r.schedule.segments) == ["periodic:x[1,3/2)", "periodic:x[2,5/2)", "periodic:x[3,7/2)"]


@pytest.mark.parametrize("seed", range(60))
def test_miss_free_runs_pass_every_checker(seed):
    chains, horizon = chain_instance(seed)
    r = edf_dyn(chains, horizon=horizon)
    assert validate_schedule(chains, r.schedule) == []
    if r.ok:
        assert check_edf_trace(chains, r.schedule) == []
        assert check_correct(chains, r.schedule) == []


@pytest.mark.parametrize("seed", range(20))
def test_runs_are_deterministic(seed):
    chains, horizon = chain_instance(seed)
    one = edf_dyn(chains, horizon=horizon)
    two = edf_dyn(list(reversed(chains)), horizon=horizon)
    assert one.schedule == two.schedule and one.events == two.events


# -- EDF-dyn-min and tree schedules


def test_inherited_deadline_lets_the_companion_go_first():
    for choice, tail in (("b", "f9:b[3,5)"), ("c", "f9:c[3,4)")):
        r = edf_dyn_min([choice_tree(), companion_chain()], oracle=FixedChoices({("f9", ("a",)): choice}))
        assert r.ok
        assert texts(r.schedule.segments) == ["f9d:d[0,1)", "f9:a[1,3)", tail]
        assert r.choices == {("f9", ("a",)): choice}
        taken = [e for e in r.events if e.kind == "ChoiceTaken"]
        assert [(e.time, e.value) for e in taken] == [(3, choice)]


def test_edf_dyn_min_on_a_chain_is_edf_dyn():
    one = edf_dyn([sync_gap_chain()], horizon=10)
    two = edf_dyn_min([sync_gap_chain()], horizon=10)
    assert one.schedule == two.schedule
    assert [e for e in one.events] == [e for e in two.events]


def test_runs_with_different_oracles_agree_before_the_choice():
    a = edf_dyn_min([choice_tree()], oracle=first_branch)
    b = edf_dyn_min([choice_tree()], oracle=FixedChoices({("f9", ("a",)): "c"}))
    assert [e for e in a.events if e.time < 2] == [e for e in b.events if e.time < 2]
    assert [s for s in a.schedule.segments if s.end <= 2] == [s for s in b.schedule.segments if s.end <= 2]


def test_scripted_oracle_counts_choices_per_task():
    loop = compile_program("agent w { loop { after(2); if choice { work(p, 1); } else { work(q, 1); } before(2); } }")[0].graph
    r = edf_dyn_min([loop], oracle=ScriptedOracle({("w", 1): 1}), horizon=6)
    assert r.ok
    assert [s.block for s in r.schedule.segments] == ["p", "q"]
    with pytest.raises(ChoiceScriptError):
        edf_dyn_min([loop], oracle=ScriptedOracle({("w", 0): 5}), horizon=6)


def test_fixed_choices_without_default_complains():
    with pytest.raises(TcaError):
        edf_dyn_min([choice_tree()], oracle=FixedChoices({}))


def test_tree_schedule_of_the_choice_pair():
    ts = explore_tree_schedule([choice_tree(), companion_chain()])
    assert texts(ts.segments) == ["f9d:d[0,1)", "f9:a[1,3)"]
    assert ts.fork == ("f9", ("a",), 3)
    assert {k: texts(v.segments) for k, v in ts.children.items()} == {"b": ["f9:b[3,5)"], "c": ["f9:c[3,4)"]}
    assert ts.branch_count == 2 and ts.ok
    assert check_prefix_coincidence(ts) == []


def test_tightened_branch_misses_alone():
    ts = explore_tree_schedule([choice_tree(deadline_c=2)])
    got = {b.choices[("f9", ("a",))]: b for b in ts.branches()}
    assert got["b"].ok
    assert got["c"].status == "deadline-miss"
    assert [(e.time, e.occurrence) for e in got["c"].events if e.kind == "DeadlineMiss"] == [(2, ("a", "c"))]
    assert texts(ts.segments) == ["f9:a[0,2)"]
    assert not ts.ok


def test_choice_free_tree_schedule_is_the_edf_dyn_run():
    ts = explore_tree_schedule([sync_gap_chain()], horizon=10)
    (branch,) = list(ts.branches())
    assert branch.schedule == edf_dyn([sync_gap_chain()], horizon=10).schedule
    assert check_prefix_coincidence(ts) == []


def test_branch_budget():
    with pytest.raises(BudgetExceeded):
        explore_tree_schedule([choice_tree(), choice_tree(name="g9")], max_branches=2)


def test_hand_built_divergence_is_reported():
    early = Segment("t", ("a",), "a", F(0), F(1))
    late = Segment("t", ("a",), "a", F(1), F(2))
    root = TreeSchedule(horizon=F(4), fork=("t", ("a",), F(3)))
    root.children = {"b": TreeSchedule([early], horizon=F(4), status="ok"), "c": TreeSchedule([late], horizon=F(4), status="ok")}
    assert [v.args for v in check_prefix_coincidence(root)] == [(0,)]
    assert check_prefix_coincidence(TreeSchedule([early], horizon=F(4), status="ok")) == []


@pytest.mark.parametrize("seed", range(40))
def test_each_branch_is_edf_dyn_on_its_extracted_chains(seed):
    trees, horizon = tree_instance(seed)
    ts = explore_tree_schedule(trees, horizon=horizon)
    assert check_prefix_coincidence(ts) == []
    for b in ts.branches():
        chains = executed_chains([apply_cdi(t) for t in trees], b.choices, horizon)
        ref = edf_dyn(chains, horizon=horizon)
        assert ref.schedule == b.schedule
        assert ref.status == b.status


# -- checkers


def test_validate_schedule_examples():
    f1 = sync_gap_chain()
    assert validate_schedule([f1], f1_schedule()) == []
    early = [("a", 0, 1)] + F1_ROWS[1:]
    assert [(v.kind, v.args) for v in validate_schedule([f1], f1_schedule(early))] == [("StartBeforeAfterDate", ("a", 1))]
    late = F1_ROWS[:2] + [("c", 6, 8), ("d", 8, 10)]
    assert [(v.kind, v.args) for v in validate_schedule([f1], f1_schedule(late))] == [("EndAfterBeforeDate", ("c", 7))]


def test_late_block_overlapping_its_successor_is_also_reported():
    rows = F1_ROWS[:2] + [("c", 6, 8), ("d", 7, 9)]
    kinds = [v.kind for v in validate_schedule([sync_gap_chain()], f1_schedule(rows))]
    assert kinds == ["EndAfterBeforeDate", "OutOfOrder", "Overlap"]


def test_unknown_blocks_are_flagged():
    bad = ScheduleMapping((Segment("f1", ("zz",), "zz", F(0), F(1)),), F(10))
    assert [v.kind for v in validate_schedule([sync_gap_chain()], bad)] == ["UnknownBlock"]


def test_check_correct_examples():
    f1 = sync_gap_chain()
    assert check_correct([f1], f1_schedule()) == []
    assert [(v.kind, v.args) for v in check_correct([f1], f1_schedule(), {"d": 3})] == [("Underallocated", ("d", 2, 3))]
    generous = [("a", 1, 2), ("b", 2, 5), ("c", 5, 6), ("d", 7, 9)]
    assert check_correct([f1], f1_schedule(generous)) == []


def test_check_correct_ignores_windows_past_the_horizon():
    short = f1_schedule(F1_ROWS[:3], horizon=7)
    assert check_correct([sync_gap_chain()], short) == []


def test_edf_trace_checker():
    f1 = sync_gap_chain()
    assert check_edf_trace([f1], f1_schedule()) == []
    lazy = F1_ROWS[:3] + [("d", 8, 10)]
    assert [(v.kind, v.args) for v in check_edf_trace([f1], f1_schedule(lazy))] == [("IdleWhileReady", (7, "f1"))]
    urgent = build_chain([after("u0", 0), ("u", 1), before("u1", 2)], name="urg")
    relaxed = build_chain([after("r0", 0), ("r", 1), before("r1", 9)], name="rel")
    wrong = ScheduleMapping(
        (Segment("rel", ("r",), "r", F(0), F(1)), Segment("urg", ("u",), "u", F(1), F(2))), F(9)
    )
    assert [v.kind for v in check_edf_trace([urgent, relaxed], wrong)] == ["NotEarliestDeadline"]


def test_merge_segments_joins_adjacent_pieces():
    a = Segment("t", ("x",), "x", F(0), F(1))
    b = Segment("t", ("x",), "x", F(1), F(2))
    c = Segment("t", ("x", "y"), "y", F(2), F(3))
    assert merge_segments([a, b, c]) == [Segment("t", ("x",), "x", F(0), F(2)), c]


def test_segment_rejects_empty_interval():
    with pytest.raises(ValueError):
        Segment("t", ("x",), "x", F(1), F(1))


@pytest.mark.parametrize("seed", range(30))
def test_allocation_matches_demand_on_miss_free_runs(seed):
    chains, horizon = chain_instance(seed)
    r = edf_dyn(chains, horizon=horizon)
    if not r.ok:
        return
    for c in chains:
        path = ()
        for block, start, deadline, cost in chain_rows(c):
            path = path + (block,)
            if deadline <= horizon:
                assert r.schedule.allocated(c.name, path) == cost
