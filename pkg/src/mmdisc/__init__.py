"""Discrepancy of point sets on compact metric measure spaces.

Spaces are normalized to total measure 1 and diameter 1.  The package builds
equal-measure partitions, draws jittered and baseline point sets, estimates
L_p and L_inf ball discrepancy, and checks the smoothing bound, the moment
inequality and the ball-volume conditions empirically.
"""
from .errors import ConfigError, InvalidArgumentError, UnsupportedCombinationError, UnsupportedSpaceError
from .space import RadialMeasure, Space

__all__ = [
    "ConfigError",
    "InvalidArgumentError",
    "RadialMeasure",
    "Space",
    "UnsupportedCombinationError",
    "UnsupportedSpaceError",
]
__version__ = "0.1.0"
