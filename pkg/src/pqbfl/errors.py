"""Exception types shared across the package.

Every error that callers are expected to catch is defined here so that the
distinction between "invalid input", "state violation" and "lookup miss"
stays visible at call sites.
"""

from __future__ import annotations


class PqbflError(Exception):
    """Base class for all package errors."""


class ParameterError(PqbflError, ValueError):
    """An argument is outside its documented domain."""


class OneTimeViolationError(PqbflError):
    """A one-time signing key was asked to sign a second time."""


class ExhaustionError(PqbflError):
    """An XMSS tree has no unused leaf keys left."""


class RolloverError(PqbflError):
    """Tree replacement failed to produce signing capacity."""


class KeygenError(PqbflError):
    """Key material could not be produced."""


class RegistryLookupError(PqbflError, KeyError):
    """Signer or tree ordinal is unknown to the registry.

    Deliberately distinct from a verification returning False: the caller
    could not even locate the public material to check against.
    """


class TrainingError(PqbflError):
    """Local training produced non-finite values or got invalid inputs."""


class ChainError(PqbflError):
    """A block violates chain rules (linkage, winner, signatures)."""


class ConsensusError(PqbflError):
    """Winner selection could not be performed."""


class ConfigError(PqbflError):
    """A run configuration is malformed or inconsistent."""
