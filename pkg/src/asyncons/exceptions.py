"""Exception types raised by asyncons."""

from __future__ import annotations


class TopologyError(ValueError):
    """A topology source could not be parsed or violates an invariant.

    ``row`` and ``col`` are 1-based locations when known.
    """

    def __init__(self, message, row=None, col=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if col is not None:
            loc.append(f"column {col}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.col = col


class NotRowStochasticError(ValueError):
    pass


class StructureError(ValueError):
    """The matrix lacks the leader structure an operation requires."""


class ConvergenceError(RuntimeError):
    """An iterative computation ran out of iterations.

    ``bracket`` holds the best known ``(lower, upper)`` bounds.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class StationaryError(RuntimeError):
    """``lim F**k`` could not be computed.

    ``kind`` is ``"oscillation"`` for periodic chains and ``"slow"`` when the
    iteration budget ran out before the powers settled.
    """

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


class EnumerationCapError(ValueError):
    pass
