"""Exception hierarchy.

Every error carries a short machine-readable ``tag`` that the command line
front end writes to stderr.
"""


class SqueezeIonError(Exception):
    tag = "error"


class ConfigError(SqueezeIonError, ValueError):
    tag = "invalid-config"


class InvalidTrapError(SqueezeIonError, ValueError):
    tag = "invalid-trap"


class UnstableRegimeError(SqueezeIonError, ValueError):
    """Parametric drive at or above the detuning (g >= delta)."""

    tag = "unstable-regime"


class DomainError(SqueezeIonError, ValueError):
    tag = "domain-error"


class DegenerateError(SqueezeIonError, ValueError):
    tag = "degenerate"


class FitFailure(SqueezeIonError, RuntimeError):
    tag = "fit-failure"


class SampleRejectionError(SqueezeIonError, RuntimeError):
    """Too many Monte-Carlo draws landed outside the model's domain."""

    tag = "sample-rejection"

    def __init__(self, message, rejected_fraction=None):
        super().__init__(message)
        self.rejected_fraction = rejected_fraction


class TruncationLeakageError(SqueezeIonError, RuntimeError):
    tag = "truncation-leakage"


class OracleMismatch(SqueezeIonError, AssertionError):
    tag = "oracle-mismatch"
