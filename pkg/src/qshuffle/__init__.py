"""Simulator for GHZ-based anonymous summation with kappa-ary randomized response."""

from qshuffle.dp import RandomizerConfig, debias, gamma_from_epsilon, randomize
from qshuffle.errors import (
    ConfigError,
    DomainError,
    ProtocolError,
    QShuffleError,
    SimulationError,
    UnsupportedDimensionError,
)
from qshuffle.protocol import ProtocolConfig, ProtocolTranscript, run_protocol

__all__ = [
    "ConfigError",
    "DomainError",
    "ProtocolConfig",
    "ProtocolError",
    "ProtocolTranscript",
    "QShuffleError",
    "RandomizerConfig",
    "SimulationError",
    "UnsupportedDimensionError",
    "debias",
    "gamma_from_epsilon",
    "randomize",
    "run_protocol",
]
