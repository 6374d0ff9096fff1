"""
Choices and inherited deadlines
===============================

Task ``f9`` runs ``a`` and then either ``b`` (due by 6) or ``c`` (due by 7).
Which branch is taken is only known once ``a`` is done, so ``a`` has to be
scheduled as if the stricter branch were coming: the choice node inherits
deadline 6. A second task with one short block due by 3 competes for the
processor.
"""

from tca.fixtures import choice_tree, companion_chain
from tca.gantt import render_text
from tca.scheduler import FixedChoices, check_prefix_coincidence, edf_dyn_min, explore_tree_schedule
from tca.transform import apply_cdi

tree, other = choice_tree(), companion_chain()
print(apply_cdi(tree))

# one run per outcome of the choice
for block in ("b", "c"):
    run = edf_dyn_min([tree, other], oracle=FixedChoices({("f9", ("a",)): block}))
    print(f"\nchoosing {block}: {run.status}")
    print(render_text(list(run.schedule.segments), run.schedule.horizon))

# or explore every outcome at once: the runs share everything before the choice
ts = explore_tree_schedule([tree, other])
print("shared prefix:", [str(s) for s in ts.segments], "choice at t =", ts.fork[2])
for branch in ts.branches():
    print(" ", branch.choices, branch.status, [str(s) for s in branch.schedule.segments])
print("prefix violations:", check_prefix_coincidence(ts))

# a stricter c: only that branch misses
tight = explore_tree_schedule([choice_tree(deadline_c=2)])
for branch in tight.branches():
    print("tightened c:", branch.choices, branch.status)
