from fractions import Fraction as F

import pytest

from tca.core import after, before, build_chain, plain
from tca.corpus import chain_instance, tree_instance
from tca.errors import BudgetExceeded, NotAbsolute
from tca.feasibility import DiscreteInstance, feasible_chains, feasible_trees
from tca.fixtures import choice_tree, companion_chain, periodic_task, sync_gap_chain, sync_gap_chain_relative
from tca.scheduler import check_correct, check_prefix_coincidence, executed_chains, validate_schedule

from oracles import brute_force_feasible


def window_chain(cost, deadline, name):
    return build_chain([after(f"{name}0", 0), ("x", cost), before(f"{name}1", deadline)], name=name)


def test_f1_is_feasible_with_the_hand_schedule():
    v = feasible_chains([sync_gap_chain()], horizon=10)
    assert v.feasible and v.certificate is None
    assert [str(s) for s in v.witness.segments] == ["f1:a[1,2)", "f1:b[2,4)", "f1:c[4,5)", "f1:d[7,9)"]


def test_single_overload_has_a_window_certificate():
    v = feasible_chains([window_chain(4, 3, "ov")], horizon=3)
    assert not v
    assert v.certificate == {"kind": "DemandExceedsWindow", "task": "ov", "block": "x",
                             "start": 0, "deadline": 3, "demand": 4}


def test_two_chains_overload_a_shared_window():
    chains = [window_chain(2, 3, "p"), window_chain(2, 3, "q")]
    assert not brute_force_feasible(chains, 3)
    v = feasible_chains(chains, horizon=3)
    assert not v
    assert v.certificate == {"kind": "Overload", "start": 0, "end": 3, "demand": 4}


def test_inverted_pair_yields_an_empty_window():
    g = build_chain([after("n0", 5), ("x", 1), before("n1", 4)], name="inv")
    v = feasible_chains([g], horizon=6)
    assert (v.certificate["kind"], v.certificate["after"], v.certificate["before"]) == ("EmptyWindow", "n0", "n1")


def test_deadline_at_the_origin_has_no_after_node():
    g = build_chain([plain("n0"), ("x", 1), before("n1", 0)], name="orig")
    v = feasible_chains([g], horizon=2)
    assert (v.certificate["kind"], v.certificate["after"]) == ("EmptyWindow", None)


def test_fractional_instance_is_scaled():
    g = build_chain([after("n0", F(1, 2)), ("x", F(3, 2)), before("n1", F(5, 2))], name="fr")
    inst = DiscreteInstance.build([g], 3)
    assert inst.scale == 2 and inst.horizon == 6
    v = feasible_chains(inst)
    assert v and [str(s) for s in v.witness.segments] == ["fr:x[1/2,2)"]


def test_chain_oracle_rejects_relative_input():
    with pytest.raises(NotAbsolute):
        feasible_chains([sync_gap_chain_relative()], horizon=10)
    with pytest.raises(TypeError):
        feasible_chains([sync_gap_chain()])


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        feasible_chains([sync_gap_chain()], horizon=10, budget=5)


def test_choice_pair_is_feasible():
    v = feasible_trees([choice_tree(), companion_chain()], horizon=8)
    assert v.feasible
    assert v.witness.branch_count == 2
    assert check_prefix_coincidence(v.witness) == []


def test_tightened_branches_are_infeasible():
    v = feasible_trees([choice_tree(deadline_b=2, deadline_c=2), companion_chain()], horizon=8)
    assert not v
    assert v.certificate is not None


def test_choice_free_trees_match_chains():
    for seed in range(20):
        chains, horizon = chain_instance(seed)
        assert bool(feasible_trees(chains, horizon=horizon)) == bool(feasible_chains(chains, horizon=horizon))


def test_cyclic_graphs_are_unfolded():
    assert feasible_trees([periodic_task(period=2, cost=1)], horizon=8)
    assert not feasible_trees([periodic_task(period=1, cost=2)], horizon=4)


@pytest.mark.parametrize("seed", range(80))
def test_chain_oracle_matches_brute_force(seed):
    chains, horizon = chain_instance(seed, max_tasks=2, max_horizon=7, max_cost=3)
    assert bool(feasible_chains(chains, horizon=horizon)) == brute_force_feasible(chains, horizon)


@pytest.mark.parametrize("seed", range(60))
def test_chain_witnesses_are_correct_schedules(seed):
    chains, horizon = chain_instance(seed)
    v = feasible_chains(chains, horizon=horizon)
    if v:
        assert validate_schedule(chains, v.witness) == []
        assert check_correct(chains, v.witness) == []
    else:
        assert v.certificate is None or v.certificate["kind"] in {"EmptyWindow", "DemandExceedsWindow", "Overload"}


@pytest.mark.parametrize("seed", range(40))
def test_tree_witness_branches_are_correct(seed):
    trees, horizon = tree_instance(seed)
    v = feasible_trees(trees, horizon=horizon)
    if not v:
        return
    assert check_prefix_coincidence(v.witness) == []
    for b in v.witness.branches():
        chains = executed_chains(trees, b.choices, horizon)
        assert validate_schedule(chains, b.schedule) == []
        assert check_correct(chains, b.schedule) == []


@pytest.mark.parametrize("seed", range(40))
def test_single_tree_is_feasible_exactly_when_every_branch_is(seed):
    # one task alone can follow each branch as soon as its choice is known
    trees, horizon = tree_instance(seed, max_trees=1)
    verdict = bool(feasible_trees(trees, horizon=horizon))
    per_branch = []
    stack = [{}]
    tree = trees[0]
    seen = set()
    while stack:
        choices = stack.pop()
        chains = executed_chains(trees, choices, horizon)
        key = tuple(a.id for a in chains[0].arcs)
        if key in seen:
            continue
        seen.add(key)
        per_branch.append(bool(feasible_chains(chains, horizon=horizon)))
        path = ()
        n = tree.initial
        while tree.out_arcs(n):
            outs = tree.out_arcs(n)
            if len(outs) > 1:
                for a in outs:
                    alt = dict(choices)
                    alt.setdefault((tree.name, path), a.block)
                    if (tree.name, path) not in choices:
                        stack.append(alt)
                chosen = choices.get((tree.name, path), outs[0].block)
                outs = [a for a in outs if a.block == chosen]
            path = path + (outs[0].block,)
            n = outs[0].dst
    assert verdict == all(per_branch)
