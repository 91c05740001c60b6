"""Exception hierarchy shared by all modules."""


class BBRSError(Exception):
    """Base class for every error raised by the package."""


class ModelError(BBRSError, ValueError):
    """A channel, pmf or configuration is malformed (e.g. not normalized)."""


class DomainError(BBRSError, ValueError):
    """An argument lies outside the domain of the operation."""


class CodingError(BBRSError):
    """A symbol cannot be coded under the given table."""


class RandomnessUnderflow(BBRSError):
    """A pop needed more bits than the stream payload and pad hold."""


class BudgetExceeded(BBRSError):
    """A sampler ran past its step budget, or an index overflowed its code."""


class InvalidBound(BBRSError):
    """A rejection sampler met a density ratio above its declared bound."""


class InvariantViolation(BBRSError):
    """Internal consistency check failed; indicates a bug or corrupt input."""


class GammaMismatch(BBRSError):
    """Decoder could not reproduce the encoder's quantised log-ratio.

    Raised when the replayed greedy rejection trace is inconsistent with the
    popped index, which happens when encoder and decoder disagree on the seed
    or the model.
    """


class NonSingularChannel(BBRSError, ValueError):
    """The channel admits no singularity witness."""
