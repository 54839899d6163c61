"""Exception hierarchy.

The CLI maps these onto exit codes, so the split between configuration
problems, violated theorem hypotheses and exhausted search horizons is
part of the public contract.
"""


class DisentangleError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(DisentangleError, ValueError):
    pass


class InvalidStateError(DisentangleError, ValueError):
    """A matrix failed the density-matrix invariants."""


class DesignError(DisentangleError, ValueError):
    """A projector family is not a valid projective 2-design."""


class EnumerationGuardError(DisentangleError, ValueError):
    pass


class ConfigError(DisentangleError, ValueError):
    pass


class HypothesisViolation(DisentangleError):
    """The channel does not satisfy the assumptions of the certificate."""


class NoDampingGapError(HypothesisViolation):
    pass


class RankDeficientSteadyStateError(HypothesisViolation):
    pass


class NonUniqueFixedPointError(HypothesisViolation):
    pass


class NotDiagonalizableError(HypothesisViolation):
    pass


class HorizonExceededError(DisentangleError):
    """A time scan hit its cap without reaching the target condition."""


class CertificationError(DisentangleError):
    """Requested decomposition is not backed by a positivity certificate."""
