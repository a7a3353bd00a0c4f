"""Exception hierarchy shared by all frontlab modules."""


class FrontlabError(Exception):
    """Base class for every domain error raised by frontlab."""


class ConfigurationError(FrontlabError, ValueError):
    """Unknown flow name, bad parameter, malformed config file."""


class ArgumentError(FrontlabError, ValueError):
    """A call received arguments of the wrong shape or range."""


class UnsupportedOperation(FrontlabError):
    """The operation is not defined for this kind of flow."""


class SolverFailure(FrontlabError, RuntimeError):
    """A numerical solver produced non-finite or runaway values.

    ``snapshot`` carries whatever diagnostic state the solver had when it
    gave up (time, step count, offending field statistics).
    """

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot or {}


class NonConvergence(FrontlabError, RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StalledPath(FrontlabError, RuntimeError):
    """Optimal-path backtracking reached a point where the gradient vanishes."""

    def __init__(self, message, stalled_at=None):
        super().__init__(message)
        self.stalled_at = stalled_at
