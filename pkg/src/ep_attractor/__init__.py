"""Dynamics of a time-dependent non-Hermitian two-level system near its exceptional point.

Modules: ``algebra`` (2x2 matrices, density matrices, Bloch vectors),
``passages`` (Hamiltonian families, frame rotation, EP location),
``oracle`` (exact Hermite-function solution), ``integrator`` (Euler/RK4
propagation), ``experiments`` (ensembles and attractor metrics) and ``cli``.
"""

from .algebra import (
    DensityMatrix,
    bloch_project,
    density_from_bloch,
    density_from_state,
    purity,
)
from .errors import ConfigurationError, DegenerateStateError, InvalidInputError, NumericalFailure
from .experiments import EnsembleSpec, figure_dataset, run_ensemble, sample_initial_states
from .integrator import IntegratorConfig, propagate, propagate_state
from .passages import PassageSpec, ep_times, hamiltonian_at

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateStateError",
    "DensityMatrix",
    "EnsembleSpec",
    "IntegratorConfig",
    "InvalidInputError",
    "NumericalFailure",
    "PassageSpec",
    "bloch_project",
    "density_from_bloch",
    "density_from_state",
    "ep_times",
    "figure_dataset",
    "hamiltonian_at",
    "propagate",
    "propagate_state",
    "purity",
    "run_ensemble",
    "sample_initial_states",
]
