"""Phase-resolved wave and ship-motion forecasting with an ensemble Kalman filter.

A high-order spectral wave model and a Cummins-equation ship model are
coupled and corrected by a perturbed-observation EnKF, optionally estimating
ship parameters through state augmentation.
"""
from .config import ExperimentConfig, load_config
from .enkf import (
    EnsembleState,
    ObservationBatch,
    ObservationOperator,
    StateLayout,
    analysis,
    augment,
    inflate,
    kalman_gain,
)
from .estimator import EnsembleKalmanFilter
from .exceptions import (
    ConfigError,
    DegenerateEnsembleError,
    InvalidInputError,
    NumericalInstabilityError,
    WaveTwinError,
)
from .harness import error_metric, run_experiment, run_truth
from .hos import HosConfig, WaveField, WavePropagator, step
from .ship import ShipGeometry, ShipParams, ShipState, cmi_step
from .spectral import Grid, SpectralField
from .synthesis import JonswapSpec, NoiseModel, ObservationSelector, realize_jonswap

__all__ = [
    "ConfigError", "DegenerateEnsembleError", "EnsembleKalmanFilter", "EnsembleState",
    "ExperimentConfig", "Grid", "HosConfig", "InvalidInputError", "JonswapSpec", "NoiseModel",
    "NumericalInstabilityError", "ObservationBatch", "ObservationOperator",
    "ObservationSelector", "ShipGeometry", "ShipParams", "ShipState", "SpectralField",
    "StateLayout", "WaveField", "WavePropagator", "WaveTwinError", "analysis", "augment",
    "cmi_step", "error_metric", "inflate", "kalman_gain", "load_config", "realize_jonswap",
    "run_experiment", "run_truth", "step",
]
