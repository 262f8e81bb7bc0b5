"""Adversarial classification risks on one-dimensional grids.

Discretized binary classification with an adversary that may move each
point up to a radius eps: exact minimization of the adversarial 0-1
risk, a matched-mass transport lower bound with a distinguished
maximizer, uniqueness diagnostics, and surrogate-loss consistency
experiments, plus a CLI (`advrisk`) that writes delimited reports and
figures.
"""

from .errors import (
    AdvRiskError,
    AdvRiskWarning,
    BudgetError,
    CertificationError,
    ConfigError,
    DomainError,
    NoWitnessError,
    NumericError,
    PreconditionError,
    SolverInfeasibleError,
    UndecidableError,
    UnknownLossError,
)
from .losses import (
    HALF_TOL,
    ConditionalRiskProfile,
    CustomTabulatedLoss,
    ExponentialLoss,
    HingeLoss,
    Loss,
    RhoMarginLoss,
    SigmoidLoss,
    SquaredHingeLoss,
    ZeroOneLoss,
    built_in_losses,
    conditional_risk,
    get_loss,
    is_adversarially_consistent_universal,
    is_consistent,
    load_custom_loss,
    modified_minimizer_map,
    optimal_conditional_risk,
    smallest_minimizer_map,
    uniform_gap,
)
from .grid import (
    EpsilonRadius,
    Grid,
    GridFunction,
    from_gaussian_mixture,
    inf_window,
    posterior,
    read_grid_csv,
    read_grid_json,
    same_lattice,
    sliding_max,
    sliding_min,
    snap_radius,
    sup_window,
    write_grid_csv,
    write_grid_json,
)
from .risks import (
    ClassifierSet,
    RiskReport,
    adversarial_risk,
    adversarial_surrogate_risk,
    exhaustive_minimal_risk,
    minimize_adversarial_risk,
    risk,
    surrogate_risk,
)
from .duality import (
    CertReport,
    Coupling,
    DualSolution,
    ExtremalClassifiers,
    UniquenessVerdict,
    certify_complementary_slackness,
    check_uniqueness,
    dual_classification_max,
    dual_surrogate_ascent,
    dual_surrogate_value,
    extremal_classifiers,
)
from .conlab import (
    ConsistencyReport,
    ExperimentConfig,
    SequenceSpec,
    inconsistency_sequence,
    modified_optimal_function,
    optimal_surrogate_function,
    run_consistency_experiment,
    slackness_diagnostics,
    threshold_function,
)

__version__ = "0.1.0"

__all__ = [
    "AdvRiskError",
    "AdvRiskWarning",
    "BudgetError",
    "CertificationError",
    "ConfigError",
    "DomainError",
    "NoWitnessError",
    "NumericError",
    "PreconditionError",
    "SolverInfeasibleError",
    "UndecidableError",
    "UnknownLossError",
    "HALF_TOL",
    "ConditionalRiskProfile",
    "CustomTabulatedLoss",
    "ExponentialLoss",
    "HingeLoss",
    "Loss",
    "RhoMarginLoss",
    "SigmoidLoss",
    "SquaredHingeLoss",
    "ZeroOneLoss",
    "built_in_losses",
    "conditional_risk",
    "get_loss",
    "is_adversarially_consistent_universal",
    "is_consistent",
    "load_custom_loss",
    "modified_minimizer_map",
    "optimal_conditional_risk",
    "smallest_minimizer_map",
    "uniform_gap",
    "EpsilonRadius",
    "Grid",
    "GridFunction",
    "from_gaussian_mixture",
    "inf_window",
    "posterior",
    "read_grid_csv",
    "read_grid_json",
    "same_lattice",
    "sliding_max",
    "sliding_min",
    "snap_radius",
    "sup_window",
    "write_grid_csv",
    "write_grid_json",
    "ClassifierSet",
    "RiskReport",
    "adversarial_risk",
    "adversarial_surrogate_risk",
    "exhaustive_minimal_risk",
    "minimize_adversarial_risk",
    "risk",
    "surrogate_risk",
    "CertReport",
    "Coupling",
    "DualSolution",
    "ExtremalClassifiers",
    "UniquenessVerdict",
    "certify_complementary_slackness",
    "check_uniqueness",
    "dual_classification_max",
    "dual_surrogate_ascent",
    "dual_surrogate_value",
    "extremal_classifiers",
    "ConsistencyReport",
    "ExperimentConfig",
    "SequenceSpec",
    "inconsistency_sequence",
    "modified_optimal_function",
    "optimal_surrogate_function",
    "run_consistency_experiment",
    "slackness_diagnostics",
    "threshold_function",
    "__version__",
]
