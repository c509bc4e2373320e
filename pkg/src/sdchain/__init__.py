"""Edge-to-edge entanglement of sinusoidally deformed XXZ chains."""

from .model import Boundary, ChainSpec, CouplingProfile, bond_profile, rescale_factor

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "ChainSpec",
    "CouplingProfile",
    "bond_profile",
    "rescale_factor",
    "__version__",
]
