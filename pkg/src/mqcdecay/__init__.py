"""
Multiple-quantum coherence decay in one-dimensional spin chains.

Modules
-------
core
    Chain geometry, dense operators, initial states and coherence sectors.
ed
    Exact diagonalization: Hamiltonians, the phase-encoded MQC protocol,
    pulse cycles, second moments and long-time asymptotes.
fermion
    Free-fermion closed forms for the thermal nearest-neighbour chain.
fitting
    Gaussian and sinc-Gaussian decay fits and coupling fits versus tau.
cli
    The ``mqcdecay`` command-line tool.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChainSpec,
    CoherenceSpectrum,
    DenseOperator,
    DimensionCapError,
    DipolarPowerLaw,
    ExplicitMatrix,
    InitialState,
    NearestNeighbor,
    build_pauli,
    coherence_spectrum,
    make_initial_state,
)
from .fermion import FermionModel, FMatrix, MomentBreakdown  # noqa: E402
from .fitting import DecayCurve, FitModel, FitResult  # noqa: E402

__all__ = [
    "ChainSpec",
    "CoherenceSpectrum",
    "DecayCurve",
    "DenseOperator",
    "DimensionCapError",
    "DipolarPowerLaw",
    "ExplicitMatrix",
    "FMatrix",
    "FermionModel",
    "FitModel",
    "FitResult",
    "InitialState",
    "MomentBreakdown",
    "NearestNeighbor",
    "build_pauli",
    "coherence_spectrum",
    "make_initial_state",
]
