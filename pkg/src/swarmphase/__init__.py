"""Adaptive interferometric phase estimation with swarm-optimized feedback policies."""

from .errors import DomainError, FitnessError, ResourceError
from .fitness import (
    LossModel,
    SharpnessReport,
    batch_sharpness,
    binomial_weight,
    fit_power_law,
    sharpness,
    sharpness_with_loss,
)
from .fock import FockVector, HalfInteger, kraus_apply, min_uncertainty_state, wigner_small_d
from .golden import table_s1, table_s2
from .policy import (
    EstimationContext,
    MeasurementRecord,
    Policy,
    estimate,
    feedback_phase,
    outcome_tree,
    record_probability,
)
from .swarm import RunResult, SwarmConfig, optimize, table_s1_config

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EstimationContext",
    "FitnessError",
    "FockVector",
    "HalfInteger",
    "LossModel",
    "MeasurementRecord",
    "Policy",
    "ResourceError",
    "RunResult",
    "SharpnessReport",
    "SwarmConfig",
    "batch_sharpness",
    "binomial_weight",
    "estimate",
    "feedback_phase",
    "fit_power_law",
    "kraus_apply",
    "min_uncertainty_state",
    "optimize",
    "outcome_tree",
    "record_probability",
    "sharpness",
    "sharpness_with_loss",
    "table_s1",
    "table_s1_config",
    "table_s2",
    "wigner_small_d",
]
