"""Time-constrained automata: model, transforms, scheduling and analysis."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    INF,
    Arc,
    GraphClass,
    Kind,
    Labeling,
    Node,
    TcaGraph,
    after,
    before,
    build_chain,
    classify,
    implicit_window,
    min_possible_deadline,
    plain,
    precedes,
    succeeds,
    sync,
    validate_graph,
)
from .scheduler import (  # noqa: E402
    check_correct,
    check_prefix_coincidence,
    edf_dyn,
    edf_dyn_min,
    explore_tree_schedule,
    validate_schedule,
)
from .transform import (  # noqa: E402
    Horizon,
    apply_cdi,
    extract_chains,
    simplify,
    to_absolute,
    to_relative,
    unfold,
)
