"""
From a program to an automaton
==============================

A small agent language compiles to relative time-constrained automata.
``after(d)`` and ``before(d)`` count from the previous ``after``, work
statements between them fuse into one block, and loops become cycles.
"""

from tca.core import implicit_window, min_possible_deadline
from tca.fixtures import LOOP_WITH_CHOICE_SOURCE, ZENO_SOURCE
from tca.psic import EmptyLoopError, compile_program, format_diagnostic
from tca.scheduler import edf_dyn_min, RECORD
from tca.transform import unfold

print(LOOP_WITH_CHOICE_SOURCE)
(agent,) = compile_program(LOOP_WITH_CHOICE_SOURCE)
print(agent.graph)


def windows(tree, block):
    out = set()
    for arc in tree.arcs:
        if arc.block == block:
            start, _ = implicit_window(tree, arc.id)
            out.add(min_possible_deadline(tree, arc.id) - start)
    return sorted(out)


# one pass through the loop: b gets 1 unit, c;d;e gets 5
once = unfold(agent.graph, 1)
print("one iteration:", {b: windows(once, b) for b in ("b", "c;d;e")})

# over several iterations the next after(1) counts from this one, and a following b
# must end one unit later, so c;d;e is squeezed to 2 units when it is followed by b
several = unfold(agent.graph, 5)
print("up to t = 5:  ", {b: windows(several, b) for b in ("b", "c;d;e")})

# the default run takes the first branch every time, and b fits easily
run = edf_dyn_min([agent.graph], horizon=8, policy=RECORD)
print("first-branch run:", run.status, [str(s) for s in run.schedule.segments])

# loops must let time pass
try:
    compile_program(ZENO_SOURCE)
except EmptyLoopError as err:
    print()
    print(format_diagnostic(err, ZENO_SOURCE, "zeno.psi"))
