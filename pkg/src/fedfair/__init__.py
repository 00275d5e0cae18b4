"""Exact error accounting and fairness audits for the mean-estimation
federation game: closed-form expected errors per federation method,
egalitarian and proportionality audits, randomized guarantee sweeps, and
a Monte Carlo oracle validating every closed form."""

from .egalitarian import (
    FairnessAudit,
    ModularityReport,
    TightnessResult,
    audit_egalitarian,
    bound_sweep,
    check_modularity,
    error_ratio,
    inverse_size_error,
    tightness_search,
)
from .errors import (
    FineGrainedContext,
    WeightVector,
    expected_error,
    fine_grained_error,
    fine_grained_weights,
    local_error,
    uniform_error,
    weighted_error,
)
from .model import (
    Coalition,
    FederationMethod,
    Player,
    PopulationParams,
    Scenario,
    validate_scenario,
)
from .montecarlo import (
    MeanDistribution,
    SimulationResult,
    SimulationSpec,
    default_suite,
    simulate_error,
    simulate_suite,
)
from .proportionality import (
    CoalitionLabel,
    PairClass,
    ProportionalityReport,
    RationalityReport,
    classify_proportionality,
    defection_threshold,
    individually_rational,
    subproportionality_threshold,
    verify_propstab,
)

__version__ = "0.1.0"

__all__ = [
    "Coalition",
    "CoalitionLabel",
    "FairnessAudit",
    "FederationMethod",
    "FineGrainedContext",
    "MeanDistribution",
    "ModularityReport",
    "PairClass",
    "Player",
    "PopulationParams",
    "ProportionalityReport",
    "RationalityReport",
    "Scenario",
    "SimulationResult",
    "SimulationSpec",
    "TightnessResult",
    "WeightVector",
    "audit_egalitarian",
    "bound_sweep",
    "check_modularity",
    "classify_proportionality",
    "default_suite",
    "defection_threshold",
    "error_ratio",
    "expected_error",
    "fine_grained_error",
    "fine_grained_weights",
    "individually_rational",
    "inverse_size_error",
    "local_error",
    "simulate_error",
    "simulate_suite",
    "subproportionality_threshold",
    "tightness_search",
    "uniform_error",
    "validate_scenario",
    "verify_propstab",
    "weighted_error",
]
