class RegretLabError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(RegretLabError, ValueError):
    """
    Raised when a learner or experiment configuration is invalid.

    Carries every problem found so the CLI can list them all at once.
    """

    def __init__(self, message: str, problems: list = None):
        self.problems = list(problems or [])
        if self.problems:
            message = f"{message}: " + "; ".join(self.problems)
        super().__init__(message)


class DomainError(RegretLabError, ValueError):
    """Raised when an input violates a domain invariant (range, shape, emptiness)."""


class BanditLogError(DomainError):
    """Raised when a full-feedback computation receives a log with hidden payoffs."""

    def __init__(self, message: str = "bandit log requires propensity reconstruction"):
        super().__init__(message)


class SolverError(RegretLabError):
    """Raised when a numerical solver fails; keeps the last residual it saw."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class UnboundedError(SolverError):
    """Raised when a linear program has no finite optimum."""

    def __init__(self, message: str = "linear program is unbounded"):
        super().__init__(message, residual=float("inf"))


class NotAuditableError(RegretLabError):
    """Raised when a market log lacks the exploration data an audit requires."""
