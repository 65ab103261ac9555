"""Exception hierarchy shared by all seqmeas modules."""


class SeqMeasError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(SeqMeasError, ValueError):
    """Structural problem: array shapes or dimensions do not fit together."""


class InputError(SeqMeasError, ValueError):
    """Argument contents violate an operation's contract."""


class InvalidOperatorError(SeqMeasError, ValueError):
    """A quantum object violates one of its type invariants.

    Carries the name of the first violated constraint and its residual.
    """

    def __init__(self, message: str, constraint: str, residual: float):
        super().__init__(f"{message} [constraint={constraint}, residual={residual:.3e}]")
        self.constraint = constraint
        self.residual = float(residual)


class AssumptionError(SeqMeasError, ValueError):
    """The Lueders repeatability assumption fails for the supplied state.

    The offending per-outcome residuals are attached as ``report``.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InconsistentModelError(SeqMeasError, RuntimeError):
    """Internal consistency check failed; indicates a bug or corrupt input."""


class ConfigError(SeqMeasError, ValueError):
    """Experiment configuration is invalid."""
