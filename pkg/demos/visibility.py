"""
Visibility dates between two periodic agents
============================================

Agent ``p`` produces a value in block ``s`` every 4 units and must be done
2 units into its period; agent ``q`` reads it in block ``r``, released 2
units later. With visibility date 2 (counted from each period of ``p``)
the data flow does not depend on how the processor is shared.
"""

from tca.comms import CommLink, Endpoint, check_visibility, paired_segments
from tca.gantt import render_text
from tca.psic import compile_program
from tca.scheduler import edf_dyn_min

SOURCE = """
agent p { loop { after(4); work(s, 1); before(2); } }
agent q { after(2); loop { after(4); work(r, 1); before(4); } }
"""

graphs = [a.graph for a in compile_program(SOURCE)]
link = CommLink(Endpoint("p", "s"), Endpoint("q", "r"), 2)
report = check_visibility(link, graphs, 16)
print("accepted:", report.accepted)
for pair in report.pairs:
    print(f"  #{pair.index}: visible at {pair.visibility}")
for note in report.diagnostics:
    print(" ", note)

run = edf_dyn_min(graphs, horizon=16)
print(render_text(list(run.schedule.segments), run.schedule.horizon))
for pair, sent, read in paired_segments(run.schedule, link, report):
    print(f"  #{pair.index}: written by {sent}, read from {read}")

# a visibility date later than the receiver's release is rejected
late = CommLink(Endpoint("p", "s"), Endpoint("q", "r"), 3)
print("visibility 3:", check_visibility(late, graphs, 16).first_violation.reason)
