# app/core/utils/exceptions.py
class EllipticLabError(Exception):
    """Base class for all errors raised by the library."""


class InputError(EllipticLabError, ValueError):
    """The caller handed over something malformed."""


class ComputationError(EllipticLabError):
    """A numerical procedure could not produce an answer."""


# Input errors


class NonSquareError(InputError):
    pass


class DimensionTooLargeError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class SingularQError(InputError):
    pass


class NonPositiveTauError(InputError):
    pass


class NonPositiveCError(InputError):
    pass


class InvalidParamsError(InputError):
    pass


class UnknownIdError(InputError):
    pass


class UnsupportedDimensionError(InputError):
    pass


class SchemaError(InputError):
    pass


# Computation errors


class NoCommonBasisError(ComputationError):
    pass


class SearchExhaustedError(ComputationError):
    pass


class SingularOperatorError(ComputationError):
    pass


class TooLargeForDenseError(ComputationError):
    pass


class PartialConeUnsupportedError(ComputationError):
    pass


class SchemeUnsupportedError(ComputationError):
    pass


class InvalidCertificateError(ComputationError):
    pass


class BoundaryNodeError(ComputationError):
    pass


class ConvergenceFailureError(ComputationError):
    pass


class ClaimMismatchError(EllipticLabError):
    """A verdict asserted in the source material was not reproduced."""
