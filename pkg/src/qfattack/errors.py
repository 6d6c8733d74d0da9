"""Exception types shared across the toolkit."""


class QFAttackError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(QFAttackError):
    """Two vectors (or a vector and a mask) disagree on dimensionality."""


class DegenerateVectorError(QFAttackError):
    """A vector with zero norm was passed where a direction is required."""


class EmptyMaskError(QFAttackError):
    """A dimension mask with no selected dimensions was used in a masked objective."""


class EmptyInputError(QFAttackError):
    """An operation received empty input where at least one element is required."""


class SimplexError(QFAttackError):
    """A relaxed-suffix weight row violates the probability simplex constraints."""


class CapabilityError(QFAttackError):
    """A backend was asked for a capability it does not support (e.g. gradients)."""


class SpaceTooLargeError(QFAttackError):
    """The exhaustive search space exceeds the configured enumeration cap."""


class TransportError(QFAttackError):
    """The remote encoder could not be reached after the configured retries."""


class ProtocolError(QFAttackError):
    """The remote encoder answered with a response that violates the wire protocol."""


class RemoteError(QFAttackError):
    """The remote encoder reported an application-level error."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code
