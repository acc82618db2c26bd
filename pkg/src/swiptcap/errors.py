"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Structurally inconsistent arguments (length mismatch, bad cardinality)."""


class AccuracyError(RuntimeError):
    """A numerical routine could not meet its accuracy target.

    Carries the best available estimate and the residual that failed the check.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class InfeasibleError(RuntimeError):
    """The constraint set admits no distribution; names the violated constraint."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class CertificationError(RuntimeError):
    """A solution failed its optimality certificate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EscalationError(RuntimeError):
    """Support-cardinality escalation exhausted its budget without certifying."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchError(RuntimeError):
    """A bracketing search found a non-monotone predicate."""

    def __init__(self, message, lo_report=None, hi_report=None):
        super().__init__(message)
        self.lo_report = lo_report
        self.hi_report = hi_report


class ConfigError(ValueError):
    """A run configuration failed validation."""
