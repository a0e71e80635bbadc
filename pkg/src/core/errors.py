"""
Error hierarchy for Evader
Every failure raised by the library derives from EvaderError
"""
from typing import Optional


class EvaderError(Exception):
    """Base class for all library errors"""


# Image and region errors
class ImageIOError(EvaderError, OSError):
    """Image file could not be read or written"""


class ImageDecodeError(EvaderError, ValueError):
    """File exists but is not a decodable image"""


class DimensionMismatchError(EvaderError, ValueError):
    """Two grids that must share a shape do not"""


class EmptyRegionError(EvaderError, ValueError):
    """An operation needs at least one pixel in a region"""


class ImageTooSmallError(EvaderError, ValueError):
    """Image is smaller than the metric window"""


class InvalidMaskValueError(EvaderError, ValueError):
    """Mask file holds values other than 0 and 255"""


class BoxOutOfBoundsError(EvaderError, ValueError):
    """Face box does not lie inside the image"""


# Oracle errors
class OracleError(EvaderError):
    """Base class for detector failures"""


class BudgetExhaustedError(OracleError):
    """Query budget is spent"""

    def __init__(self, used: int, budget: int):
        super().__init__(f"query budget exhausted: {used}/{budget} used")
        self.used = used
        self.budget = budget


class TransportError(OracleError, OSError):
    """Detector endpoint unreachable or answered with a retryable status"""

    def __init__(self, message: str, status_code: Optional[int] = None,
                 retry_after: Optional[float] = None):
        super().__init__(message)
        self.status_code = status_code
        self.retry_after = retry_after


class AuthError(OracleError):
    """Detector rejected the credentials (HTTP 401/403)"""


class MalformedResponseError(OracleError, ValueError):
    """Detector answer lacks a configured field or is not JSON"""


class MissingConfidenceError(OracleError, ValueError):
    """Verdict carries no usable confidence"""


# Attack errors
class AttackError(EvaderError):
    """Base class for attack precondition failures"""


class PreconditionNotIllegalError(AttackError, ValueError):
    """The original image is not judged illegal, nothing to evade"""


class NoNumericConfidenceError(AttackError, ValueError):
    """Attack ranks by confidence but the detector returns none"""


# Harness errors
class EmptyInputError(EvaderError, ValueError):
    """Aggregation over zero outcomes"""
