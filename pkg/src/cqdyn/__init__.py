"""Coupled bipartite dynamics under quantum, classical-quantum and classical schemes."""

from ._backend import BACKEND
from .errors import (
    AccuracyError,
    BlowUpError,
    CollapseError,
    CqdynError,
    DimensionError,
    InsufficientDataError,
    NoRootError,
    NumericError,
    TruncationError,
    UnsupportedError,
    ValidationError,
)
from .model import OscillatorConfig, SystemSpec, oscillator_system, qq_initial_state

__version__ = "0.1.0"
