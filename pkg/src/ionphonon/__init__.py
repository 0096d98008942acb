"""Simulation and verification toolkit for laser-free trapped-ion phonon engineering."""
from ionphonon.fock import (DensityMatrix, HilbertSpace, Operator, StateVector, fidelity, fock_state,
                            make_space, mode_space, partial_trace)
from ionphonon.hamiltonians import HamiltonianSpec, build, unit_convert
from ionphonon.kernels import BACKEND
from ionphonon.propagate import PropagationError, Trajectory, evolve

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DensityMatrix", "HamiltonianSpec", "HilbertSpace", "Operator", "PropagationError",
    "StateVector", "Trajectory", "build", "evolve", "fidelity", "fock_state", "make_space",
    "mode_space", "partial_trace", "unit_convert", "__version__",
]
