"""Anisotropic Ising models on chain, square, triangular and Union Jack lattices."""

from .errors import SpinLatticeError
from .lattice import (
    Bond,
    CouplingSet,
    Lattice,
    LatticeKind,
    LatticeSpec,
    Measurement,
    Sublattice,
    build_lattice,
    local_delta_energy,
    measure,
    three_site_correlator,
    total_energy,
)

__version__ = "0.1.0"

__all__ = [
    "Bond",
    "CouplingSet",
    "Lattice",
    "LatticeKind",
    "LatticeSpec",
    "Measurement",
    "SpinLatticeError",
    "Sublattice",
    "build_lattice",
    "local_delta_energy",
    "measure",
    "three_site_correlator",
    "total_energy",
]
