"""Classical and quantum Kepler-map dynamics of light dark matter in binary systems."""

__version__ = "0.1.0"

from .binary import BinarySystem, DmpSpec, Harmonic, atomic_scales, preset  # noqa: E402
from .constants import CONSTANTS, PhysicalConstants  # noqa: E402

__all__ = [
    "BinarySystem",
    "CONSTANTS",
    "DmpSpec",
    "Harmonic",
    "PhysicalConstants",
    "atomic_scales",
    "preset",
    "__version__",
]
