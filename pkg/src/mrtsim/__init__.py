"""Multilevel resonant-tunneling simulator for an rf-SQUID flux qubit.

Computes interwell escape rates under combined low-frequency Gaussian flux
noise, high-frequency (sub-)Ohmic flux noise, and charge noise, plus the
master-equation population dynamics built on the same rate matrix.
"""

from .config import RunConfig, load_config, parse_config
from .dynamics import (Trajectory, boltzmann, escape_rate_from_decay, evolve,
                       generator_matrix, shifted_levels, steady_state)
from .errors import (ConfigurationError, IntegrationError, LevelCountError,
                     MrtError, ParameterError, PotentialShapeError,
                     ResolutionError, SingularPairError)
from .noise import (ChargeNoise, HighFreqFluxNoise, LowFreqFluxNoise,
                    NoiseParams, PairNoiseParams, gaussian_envelope,
                    hf_envelope, kappa, pair_params)
from .rates import (EscapeRate, FrequencyGrid, HybridSpectrum, LevelDressing,
                    MrtSweep, RateOptions, SweepPoint, escape_rate,
                    hybrid_spectrum, level_broadening, level_shift, mrt_sweep,
                    rate_matrix, relaxation_rate)
from .squid import LrBasis, PhaseGrid, SquidParams, solve_basis

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "load_config", "parse_config",
    "Trajectory", "boltzmann", "escape_rate_from_decay", "evolve",
    "generator_matrix", "shifted_levels", "steady_state",
    "MrtError", "ParameterError", "ConfigurationError", "PotentialShapeError",
    "LevelCountError", "SingularPairError", "ResolutionError",
    "IntegrationError",
    "LowFreqFluxNoise", "HighFreqFluxNoise", "ChargeNoise", "NoiseParams",
    "PairNoiseParams", "gaussian_envelope", "hf_envelope", "kappa",
    "pair_params",
    "FrequencyGrid", "HybridSpectrum", "LevelDressing", "RateOptions",
    "EscapeRate", "MrtSweep", "SweepPoint", "escape_rate", "hybrid_spectrum",
    "level_broadening", "level_shift", "mrt_sweep", "rate_matrix",
    "relaxation_rate",
    "LrBasis", "PhaseGrid", "SquidParams", "solve_basis",
    "__version__",
]
