"""Typed failure modes shared across the package.

Precondition violations and data starvation are user-facing and map to
distinct CLI exit codes; internal-consistency errors indicate a broken
invariant inside an algorithm and are never caught silently.
"""

__all__ = [
    "PreconditionError",
    "InsufficientDepth",
    "InfeasibleTarget",
    "WitnessNotFound",
    "ConstructionFailure",
    "InternalConsistencyError",
]


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class InsufficientDepth(PreconditionError):
    """The tree/sequence/cloud does not resolve the requested scales."""


class InfeasibleTarget(PreconditionError):
    """Requested dimension target cannot be met by any admissible parameter."""


class WitnessNotFound(RuntimeError):
    """Bounded search exhausted the available depth without a witness."""


class ConstructionFailure(RuntimeError):
    """A constructed object failed its own validation."""


class InternalConsistencyError(RuntimeError):
    """An invariant the surrounding proof guarantees was violated; always a bug."""
