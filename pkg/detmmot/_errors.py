"""
Exception hierarchy. Each class names the CLI exit code it maps to.
"""
from __future__ import annotations

__all__ = [
    "DetmmotError",
    "ContractViolation",
    "DegenerateInputError",
    "AtomicMarginalError",
    "ResourceGuardError",
    "InternalInconsistencyError",
]


class DetmmotError(Exception):
    exit_code = 1


class ContractViolation(DetmmotError, ValueError):
    """
    An argument broke a documented precondition (shapes, weights, ranges).
    """

    exit_code = 2


class DegenerateInputError(DetmmotError, ValueError):
    """
    The input is well formed but geometrically degenerate, e.g. a rank
    deficient frame or an empty orthogonal complement.
    """

    exit_code = 2


class AtomicMarginalError(DetmmotError, ValueError):
    """
    A radial marginal carries atoms, so the monotone rearrangement is not unique.
    """

    exit_code = 3


class ResourceGuardError(DetmmotError, RuntimeError):
    """
    The requested instance exceeds the configured size guard.
    """

    exit_code = 4


class InternalInconsistencyError(DetmmotError, RuntimeError):
    """
    A result violated an identity that must hold, signalling a bug.
    """

    exit_code = 1
