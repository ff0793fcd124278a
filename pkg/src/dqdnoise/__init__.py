"""Lindblad model of a QPC-monitored double quantum dot.

Computes singlet-sector steady states, detector current noise and Fano
factors, with three mutually validating routes: a resolvent linear
solve, direct quadrature of the current autocorrelation, and
Monte-Carlo wave-function trajectories with jump counting.
"""

from .errors import DegenerateSteadyStateError, NumericalError, ParameterError
from .liouvillian import (build_generator, evolve, generator, spectral_gap,
                          steady_state_analytic, steady_state_numeric, unvec,
                          vec)
from .model import (EigenStructure, OperatorSet, PhononRates, bose_occupation,
                    build_operator_set, build_phonon_operators,
                    build_qpc_operators, delta_from_splitting, eigenstructure,
                    hamiltonian, phonon_rates, qpc_amplitudes,
                    splitting_from_delta)
from .noise import (NoiseResult, correlation_regular, fano_nophonon,
                    fano_quadrature, fano_resolvent, finite_window_fano,
                    jump_map, mean_current, triplet_current_and_fano)
from .params import (E_CHARGE, HBAR_MEV_NS, KB_MEV_PER_K, ModelParams,
                     default_params, effective_couplings, format_config,
                     parse_config)
from .trajectories import (CountRecord, TrajectoryConfig,
                           ensemble_average_state, run_trajectories)

__all__ = [
    "CountRecord",
    "DegenerateSteadyStateError",
    "E_CHARGE",
    "EigenStructure",
    "HBAR_MEV_NS",
    "KB_MEV_PER_K",
    "ModelParams",
    "NoiseResult",
    "NumericalError",
    "OperatorSet",
    "ParameterError",
    "PhononRates",
    "TrajectoryConfig",
    "bose_occupation",
    "build_generator",
    "build_operator_set",
    "build_phonon_operators",
    "build_qpc_operators",
    "correlation_regular",
    "default_params",
    "delta_from_splitting",
    "eigenstructure",
    "effective_couplings",
    "ensemble_average_state",
    "evolve",
    "fano_nophonon",
    "fano_quadrature",
    "fano_resolvent",
    "finite_window_fano",
    "format_config",
    "generator",
    "hamiltonian",
    "jump_map",
    "mean_current",
    "parse_config",
    "phonon_rates",
    "qpc_amplitudes",
    "run_trajectories",
    "spectral_gap",
    "splitting_from_delta",
    "steady_state_analytic",
    "steady_state_numeric",
    "triplet_current_and_fano",
    "unvec",
    "vec",
]

__version__ = "0.1.0"
