# label_uncertainty/__init__.py
"""
Top-level API for label-uncertainty.
Exports the uncertainty scores, the data-generating worlds, the exact
oracles, the learner and the evaluation metrics.
"""

from label_uncertainty.models import (
    GradeScale,
    GradeHistogram,
    UncertaintyKind,
    UncertaintySpec,
    LabeledInstance,
    AdjudicatedInstance,
    TrainConfig,
    TrainMode,
    TransportMetric,
    Aggregation,
    BiasReport,
    TransportPlan,
    RankingReport,
)

# Uncertainty scores
from label_uncertainty.uncertainty import (
    empirical_histogram,
    u_disagree,
    u_var,
    u_entropy,
    uncertainty,
    binarize,
)

# Worlds
from label_uncertainty.gaussian_world import (
    GaussianMixtureWorld,
    sample_gaussian_world,
    gm_posterior,
    draw_labels,
    gen_gaussian_dataset,
)
from label_uncertainty.discrete_world import DiscreteWorld, build_discrete_world
from label_uncertainty.blur_world import blur_image, label_noise_dist, gen_blur_dataset

# Oracles
from label_uncertainty.oracle import (
    exact_h_dup,
    exact_h_uvc,
    bias_report,
    wasserstein_point_mass,
    brute_force_wasserstein,
)

# Learner
from label_uncertainty.mlp import MlpModel, forward, loss, gradient_check, uvc_score, dup_score
from label_uncertainty.training import train, calibrate_temperature

# Evaluation
from label_uncertainty.metrics import roc_auc, spearman
from label_uncertainty.ranking import (
    aggregate_majority,
    aggregate_median,
    agreement_labels,
    continuous_disagreement,
    subsample_doctor_ranking,
)
from label_uncertainty.experiments import convergence_study, gaussian_world_comparison, train_size_sweep

# Errors
from label_uncertainty.errors import UncertaintyError

__all__ = [
    # Types
    "GradeScale",
    "GradeHistogram",
    "UncertaintyKind",
    "UncertaintySpec",
    "LabeledInstance",
    "AdjudicatedInstance",
    "TrainConfig",
    "TrainMode",
    "TransportMetric",
    "Aggregation",
    "BiasReport",
    "TransportPlan",
    "RankingReport",

    # Uncertainty
    "empirical_histogram",
    "u_disagree",
    "u_var",
    "u_entropy",
    "uncertainty",
    "binarize",

    # Worlds
    "GaussianMixtureWorld",
    "sample_gaussian_world",
    "gm_posterior",
    "draw_labels",
    "gen_gaussian_dataset",
    "DiscreteWorld",
    "build_discrete_world",
    "blur_image",
    "label_noise_dist",
    "gen_blur_dataset",

    # Oracles
    "exact_h_dup",
    "exact_h_uvc",
    "bias_report",
    "wasserstein_point_mass",
    "brute_force_wasserstein",

    # Learner
    "MlpModel",
    "forward",
    "loss",
    "gradient_check",
    "uvc_score",
    "dup_score",
    "train",
    "calibrate_temperature",

    # Evaluation
    "roc_auc",
    "spearman",
    "aggregate_majority",
    "aggregate_median",
    "agreement_labels",
    "continuous_disagreement",
    "subsample_doctor_ranking",
    "train_size_sweep",
    "gaussian_world_comparison",
    "convergence_study",

    "UncertaintyError",
]
