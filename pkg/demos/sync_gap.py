"""
A chain with a synchronization point
====================================

One task, four blocks. ``a`` may start at 1, ``b`` after 2, ``c`` has to be
done by 7 where a sync point also holds ``d`` back until 7, and ``d`` ends
by 10. EDF-dyn runs the blocks as early as allowed and idles over [5, 7).
"""

from tca.fixtures import sync_gap_chain
from tca.gantt import render_text
from tca.scheduler import check_correct, edf_dyn, validate_schedule

chain = sync_gap_chain()
print(chain)

# every block's implicit window: the latest after date before it, the earliest before date after it
from tca.core import implicit_window

for arc in chain.arcs:
    start, deadlines = implicit_window(chain, arc.id)
    print(f"  {arc.block}: cost {arc.cost}, window [{start}, {min(deadlines)})")

run = edf_dyn([chain], horizon=10)
print("\nstatus:", run.status)
for event in run.events:
    print(" ", event)

markers = [(chain.name, n.kind.value, n.date) for n in chain.nodes if n.date is not None]
print()
print(render_text(list(run.schedule.segments), run.schedule.horizon, markers))

# both checkers agree the schedule is valid and gives every block its cost
print("violations:", validate_schedule([chain], run.schedule) + check_correct([chain], run.schedule))

# with d twice as long, the chain still fits
longer = edf_dyn([chain], exec_times={"d": 3}, horizon=10)
print("with |d| = 3:", [str(s) for s in longer.schedule.segments], longer.status)
