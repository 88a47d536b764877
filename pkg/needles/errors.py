"""Exceptions raised by the needles package.

Validation problems subclass ``ValueError`` so callers that only care about
bad input can keep catching that.
"""


class NeedlesError(Exception):
    """Base class of every error raised by this package."""


class ConfigurationError(NeedlesError, ValueError):
    """An input violates a StarSpec, LatticeSpec or ThrowConfig invariant."""


class NeedleCountError(ConfigurationError):
    pass


class NeedleLengthError(ConfigurationError):
    pass


class NonPositiveSpacingError(ConfigurationError):
    pass


class AngleRangeError(ConfigurationError):
    pass


class AdmissibilityError(ConfigurationError):
    pass


class UnsupportedNeedleCountError(ConfigurationError):
    """Closed forms exist for odd n only."""

    def __init__(self, n: int):
        super().__init__(
            f"Exact intersection probabilities are implemented for odd n >= 3, got n={n}. "
            "Use needles.montecarlo.simulate for even n."
        )
        self.n = n


class LimitParameterError(ConfigurationError):
    pass


class OutOfRangeError(NeedlesError, ValueError):
    """An index (k, j) or interval tag outside its admissible range."""


class OracleConvergenceError(NeedlesError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class VerificationError(NeedlesError):
    """At least one oracle comparison failed."""

    def __init__(self, message: str, failures=None):
        super().__init__(message)
        self.failures = failures
