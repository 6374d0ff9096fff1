"""
EDF against an exhaustive search
================================

On small random instances, EDF-dyn misses a deadline exactly when no
schedule at all exists, and EDF-dyn-min, explored over every outcome of
every choice, is miss-free exactly when some schedule serves all outcomes.
"""

import time

from tca.corpus import chain_instance, tree_instance
from tca.feasibility import feasible_chains, feasible_trees
from tca.scheduler import edf_dyn, explore_tree_schedule

t0 = time.perf_counter()
agree = feasible = 0
for seed in range(100):
    chains, horizon = chain_instance(seed)
    verdict = feasible_chains(chains, horizon=horizon)
    feasible += verdict.feasible
    agree += verdict.feasible == edf_dyn(chains, horizon=horizon).ok
print(f"chains: {agree}/100 agree, {feasible} feasible ({time.perf_counter() - t0:.2f} s)")

agree = feasible = 0
for seed in range(100):
    trees, horizon = tree_instance(seed)
    verdict = feasible_trees(trees, horizon=horizon)
    feasible += verdict.feasible
    agree += verdict.feasible == explore_tree_schedule(trees, horizon=horizon).ok
print(f"trees:  {agree}/100 agree, {feasible} feasible")

# infeasible instances come with a reason
chains, horizon = chain_instance(5)
verdict = feasible_chains(chains, horizon=horizon)
print("seed 5:", "feasible" if verdict else verdict.certificate)
