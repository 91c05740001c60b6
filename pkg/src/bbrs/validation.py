"""Input checks shared by the estimator facade and the CLI."""
from __future__ import annotations

from collections.abc import Mapping

from .channel import DiscreteChannel, make_channel
from .exceptions import DomainError
from .numerics import MAX_DELTA_DENOMINATOR, as_rational
from .randomness import SharedSeed


def check_channel(channel) -> DiscreteChannel:
    """Accept a channel, a config mapping, a JSON string or a config path."""
    if isinstance(channel, DiscreteChannel):
        return channel
    if isinstance(channel, (Mapping, str)):
        return make_channel(channel)
    raise DomainError(f"expected a DiscreteChannel or a channel config, got {type(channel).__name__}")


def check_delta(delta):
    d = as_rational(str(delta) if isinstance(delta, (str, int)) else delta)
    if d <= 0 or d.denominator > MAX_DELTA_DENOMINATOR:
        raise DomainError(f"delta must be a positive p/q with q <= {MAX_DELTA_DENOMINATOR}, got {delta!r}")
    return d


def check_seed(seed) -> SharedSeed:
    if isinstance(seed, SharedSeed):
        return seed
    if isinstance(seed, bool):
        raise DomainError("seed must be an integer, 64 hex characters or 32 bytes")
    if isinstance(seed, int):
        return SharedSeed.from_int(seed)
    if isinstance(seed, bytes):
        return SharedSeed(seed)
    if isinstance(seed, str):
        return SharedSeed.from_hex(seed)
    raise DomainError("seed must be an integer, 64 hex characters or 32 bytes")


def check_inputs(X, channel: DiscreteChannel) -> list[int]:
    """Map input symbols to alphabet indices; rejects unknown or zero-probability inputs."""
    if isinstance(X, (str, bytes)) or not hasattr(X, "__iter__"):
        raise DomainError("X must be a sequence of input symbols")
    out = []
    for pos, sym in enumerate(X):
        sym = sym.item() if hasattr(sym, "item") else sym
        try:
            out.append(channel.x_index(sym))
        except (KeyError, ValueError):
            raise DomainError(f"X[{pos}] = {sym!r} is not an input of {channel.name}") from None
    if not out:
        raise DomainError("X must not be empty")
    return out


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return value
