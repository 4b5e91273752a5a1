"""kbmlab: simulation and statistical verification of kinetic Brownian motion.

A kinetic Brownian motion is a unit-speed random path whose velocity diffuses
on the unit sphere of the tangent space; this package simulates it in flat
space and on rotationally invariant manifolds, lifts sampled paths to level-2
rough paths, develops flat paths onto manifolds, and turns the known
long-time and large-noise limits into seeded, reproducible numerical checks.
"""

__version__ = "0.1.0"

from . import cartan, geometry, kbm, roughpath, sde_core, stats
from .errors import (
    ConfigError,
    DomainError,
    DomainExitError,
    InputError,
    KbmLabError,
    NumericalError,
    ParameterError,
    RangeError,
    StateError,
    StatisticsError,
)

__all__ = [
    "__version__",
    "cartan",
    "geometry",
    "kbm",
    "roughpath",
    "sde_core",
    "stats",
    "ConfigError",
    "DomainError",
    "DomainExitError",
    "InputError",
    "KbmLabError",
    "NumericalError",
    "ParameterError",
    "RangeError",
    "StateError",
    "StatisticsError",
]
