"""Exception hierarchy shared by all modules."""


class CollabError(Exception):
    """Base class for package errors."""


class ParameterError(CollabError, ValueError):
    """Invalid scenario or solver parameter."""


class DomainError(CollabError, ValueError):
    """Argument outside the domain of a metric."""


class InfeasibleError(CollabError):
    """The requested target cannot be reached (e.g. J_check >= J0)."""


class SolverError(CollabError):
    """A numerical subproblem failed; ``diagnostics`` carries the trace."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
