"""Digital twin of a closed hydraulic loop with learned fault diagnosis."""

from .hydronet import (
    DEFAULT_CONFIG,
    NOMINAL_THETA,
    ComponentVector,
    ControlVector,
    LoopConfig,
    NoConvergence,
    ProcessVector,
    simulate,
)

__all__ = [
    "DEFAULT_CONFIG",
    "NOMINAL_THETA",
    "ComponentVector",
    "ControlVector",
    "LoopConfig",
    "NoConvergence",
    "ProcessVector",
    "simulate",
]
