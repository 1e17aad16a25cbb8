# errors.py
"""
Exception hierarchy for pseudogeo.

Numerical stop conditions of an integration are not errors; they are reported
through GeodesicPath.stop_reason. Everything raised here means the caller
asked for something the mathematics (or the input) does not allow.
"""


class GeodesicError(Exception):
    """Base class for every error raised by pseudogeo."""


class NotParabolic(GeodesicError):
    pass


class NotTransverse(GeodesicError):
    pass


class NotNormalized(GeodesicError):
    pass


class DegenerateMetric(GeodesicError):
    pass


class InvalidStart(GeodesicError):
    pass


class StepUnderflow(GeodesicError):
    pass


class InsufficientSamples(GeodesicError):
    pass


class NotOnSurface(GeodesicError):
    pass


class IsotropicJet(GeodesicError):
    """The jet lies on the isotropic surface; its energy level is infinite."""


class AssumptionViolated(GeodesicError):
    """The metric violates a standing assumption at `sample`."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class UnknownMetric(GeodesicError):
    pass


class BadParam(GeodesicError):
    pass


class ExpressionError(GeodesicError):
    pass


class ConfigError(GeodesicError):
    pass
