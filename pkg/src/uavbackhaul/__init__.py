"""Coverage of a cellular network assisted by wirelessly backhauled UAV base
stations: analytic model, Monte-Carlo simulator and batch front-end."""

from .analytic import (AnalyticModel, AssociationProbs, AwareTransmissionProbs, CoverageResult, association_probs,
                       aware_transmission_probs, backhaul_prob, get_model, overall_cov_aware, overall_cov_unaware)
from .errors import ConfigError, DomainError, NoBackhaulBS, NonConvergence
from .geometry import DeploymentGeometry
from .params import DEFAULT_CONFIG, NetworkParams, build_params, default_params, load_config
from .simulator import SCHEMES, estimate, estimate_all, simulate_trials

__all__ = [
    "AnalyticModel", "AssociationProbs", "AwareTransmissionProbs", "ConfigError", "CoverageResult",
    "DEFAULT_CONFIG", "DeploymentGeometry", "DomainError", "NetworkParams", "NoBackhaulBS", "NonConvergence",
    "SCHEMES", "association_probs", "aware_transmission_probs", "backhaul_prob", "build_params",
    "default_params", "estimate", "estimate_all", "get_model", "load_config", "overall_cov_aware",
    "overall_cov_unaware", "simulate_trials",
]
