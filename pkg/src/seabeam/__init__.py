"""Robust downlink beamforming for integrated satellite-terrestrial maritime networks."""
from .beamformer import (InfeasibleError, PenaltyConfig, QosSpec, RobustSolution, SolveReport,
                         complexity_estimate, nonrobust_solve, penalty_sca_solve, sdr_initialize,
                         verify_worst_case)
from .channel_model import BeamSet, ChannelSet, all_rates
from .config import ConfigError, ExperimentConfig
from .csi_uncertainty import UncertaintyModel
from .estimator import RobustBeamformer
from .scenario import Scenario, build_scenario

__all__ = [
    "BeamSet", "ChannelSet", "ConfigError", "ExperimentConfig", "InfeasibleError", "PenaltyConfig",
    "QosSpec", "RobustBeamformer", "RobustSolution", "Scenario", "SolveReport", "UncertaintyModel",
    "all_rates", "build_scenario", "complexity_estimate", "nonrobust_solve", "penalty_sca_solve",
    "sdr_initialize", "verify_worst_case",
]
__version__ = "0.1.0"
