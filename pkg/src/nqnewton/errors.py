"""Exception types shared across the package."""


class NqnewtonError(Exception):
    """Base class for all package-specific errors."""


class InvalidInput(NqnewtonError):
    """Malformed numerical input (non-finite entries, wrong shape, ...)."""


class SingularMatrix(NqnewtonError):
    """A linear solve hit a (numerically) singular operator."""


class EvaluationError(NqnewtonError):
    """A problem evaluator returned non-finite values."""


class MissingDerivative(NqnewtonError):
    """An analytic derivative was requested but the problem does not provide it."""


class RegularizationFailed(NqnewtonError):
    """The shift ladder was exhausted; signals a configuration bug, not a
    recoverable state (with >= dim+1 pairwise-distinct shifts this is
    mathematically impossible)."""


class LineSearchStalled(NqnewtonError):
    """No step size above the floor satisfied the acceptance conditions."""


class NotCritical(NqnewtonError):
    """A diagnostic requiring an (approximately) critical point was called
    somewhere else."""


class InsufficientData(NqnewtonError):
    """Not enough usable samples to produce a meaningful estimate."""


class ConfigError(NqnewtonError):
    """Invalid solver or CLI configuration; the message names the field."""
