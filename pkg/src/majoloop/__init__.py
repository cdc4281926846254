"""Loop-model simulator for measurement-only Majorana circuits."""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
from .errors import ArgumentError, CompositionError, ConfigurationError, DomainError, FitError  # noqa: E402
from .lattice import Geometry, LatticeSpec, build_lattice, set_weights  # noqa: E402
from .loopstate import CircuitBlock, Closure, LoopHistogram, close_boundary, compose, make_layer  # noqa: E402

__all__ = [
    "BACKEND",
    "ArgumentError",
    "CircuitBlock",
    "Closure",
    "CompositionError",
    "ConfigurationError",
    "DomainError",
    "FitError",
    "Geometry",
    "LatticeSpec",
    "LoopHistogram",
    "build_lattice",
    "close_boundary",
    "compose",
    "make_layer",
    "set_weights",
]
