"""Shared exception types."""


class NormsurfError(Exception):
    """Base class for all toolkit errors."""


class FormatError(NormsurfError):
    """A text input failed to parse.

    Carries enough context (file name, line number, offending token) to
    produce a usable diagnostic from the command line.
    """

    def __init__(self, message, filename=None, line=None, token=None):
        self.filename = filename
        self.line = line
        self.token = token
        parts = []
        if filename is not None:
            parts.append(str(filename))
        if line is not None:
            parts.append(f"line {line}")
        prefix = ": ".join(parts)
        if token is not None:
            message = f"{message} (token {token!r})"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ReversedEdgeError(NormsurfError):
    """An edge of the triangulation is identified to itself with reversed
    orientation, so the space is not a manifold near that edge."""

    def __init__(self, tet, edge):
        self.tet = tet
        self.edge = tuple(sorted(edge))
        super().__init__(
            f"edge {self.edge} of tetrahedron {tet} is identified to "
            f"itself with reversed orientation"
        )


class IncompleteGluingError(NormsurfError):
    """A gluing certificate does not cover every nonempty interior site,
    or a permutation has the wrong size."""


class BudgetExceededError(NormsurfError):
    """A search or enumeration was refused or aborted because it exceeds
    the configured budget.  Distinct from a negative verdict."""
