"""Exception hierarchy shared across the package."""


class QShuffleError(Exception):
    """Base class for all errors raised by qshuffle."""


class ConfigError(QShuffleError, ValueError):
    """Invalid configuration: non-prime dimension, d too small, bad counts."""


class DomainError(QShuffleError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class UnsupportedDimensionError(QShuffleError):
    """The requested backend cannot represent the given qudit dimension."""


class ProtocolError(QShuffleError):
    """A party or channel observed a message that violates the protocol."""


class SimulationError(QShuffleError, RuntimeError):
    """Internal numerical failure, e.g. a state that lost its normalisation."""
