"""Exception types shared across the package."""

from __future__ import annotations


class TcaError(Exception):
    """Base class for all errors raised by this package."""


class UnknownElement(TcaError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotAcyclic(TcaError):
    pass


class NotAbsolute(TcaError):
    pass


class NotRelative(TcaError):
    pass


class NotSimplified(TcaError):
    pass


class AmbiguousBase(TcaError):
    """A join node is reached from paths with different time bases."""


class ImpossibleConstraints(TcaError):
    """An after node precedes a before node it cannot be satisfied with."""

    def __init__(self, after_node, before_node, message=None):
        self.after_node = after_node
        self.before_node = before_node
        super().__init__(
            message
            or f"constraints of {after_node!r} and {before_node!r} cannot both hold"
        )


class ZenoCycle(TcaError):
    """A cycle of the automaton does not advance time."""

    def __init__(self, nodes, message=None):
        self.nodes = tuple(nodes)
        super().__init__(
            message or "cycle through " + ", ".join(self.nodes) + " advances no time"
        )


class UnresolvedChoice(TcaError):
    def __init__(self, task, occurrence):
        self.task = task
        self.occurrence = tuple(occurrence)
        super().__init__(
            f"no choice given for task {task!r} at occurrence {'/'.join(self.occurrence) or '<root>'}"
        )


class BudgetExceeded(TcaError):
    pass


class InvalidGraph(TcaError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
