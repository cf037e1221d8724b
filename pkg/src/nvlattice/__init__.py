"""Mean-field Mott-insulator/superfluid simulator for a lattice of
Lambda-type emitters coupled to nanocavities: equilibrium phase diagrams,
dissipative Lindblad steady states, photon statistics and emission spectra."""

from .equilibrium import LatticePoint
from .qspace import HilbertSpace, ModelParams, build_space

__all__ = ["ModelParams", "HilbertSpace", "LatticePoint", "build_space"]
__version__ = "0.1.0"
