"""Port-based quantum teleportation: spectra, protocols, dense oracle, certificates."""

from .limits import CapacityError
from .protocols import Variant, build_protocol, performance

__all__ = ["CapacityError", "Variant", "build_protocol", "performance"]
__version__ = "0.1.0"
