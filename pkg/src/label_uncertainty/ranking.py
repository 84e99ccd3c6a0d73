# label_uncertainty/ranking.py
"""
Agreement with an adjudicated grade.

Binary agreement compares an aggregate of the individual labels against the
adjudicated grade; the continuous version is the Wasserstein distance from
the label histogram to a point mass at the adjudicated grade.
"""
from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from label_uncertainty.datasets import Seed, make_rng, spawn_seeds
from label_uncertainty.errors import (
    CorrelationUndefinedError,
    EmptyLabelsError,
    InvalidParameterError,
    UnknownGradeError,
)
from label_uncertainty.gaussian_world import (
    GaussianMixtureWorld,
    draw_label_rows,
    obscure,
    posterior_matrix,
    sample_observations,
)
from label_uncertainty.metrics import spearman
from label_uncertainty.models import (
    AdjudicatedInstance,
    Aggregation,
    GradeScale,
    TransportMetric,
)
from label_uncertainty.oracle import wasserstein_point_mass
from label_uncertainty.uncertainty import empirical_histogram

# logging
logger = logging.getLogger(__name__)

ADJUDICATED_LABELS_PER_INSTANCE = 20


def _labels(labels: Sequence[int]) -> np.ndarray:
    values = np.asarray(labels, dtype=int)
    if values.size == 0:
        raise EmptyLabelsError("no labels")
    if np.any(values < 0):
        raise UnknownGradeError("unknown grade", data={"labels": values.tolist()})
    return values


def aggregate_majority(labels: Sequence[int]) -> int:
    """Modal grade; ties go to the lower grade."""
    return int(np.argmax(np.bincount(_labels(labels))))


def aggregate_median(labels: Sequence[int]) -> int:
    """Middle grade; the lower middle for even counts."""
    values = np.sort(_labels(labels))
    return int(values[(len(values) - 1) // 2])


def aggregate(labels: Sequence[int], aggregation: Aggregation) -> int:
    if Aggregation(aggregation) is Aggregation.MAJORITY:
        return aggregate_majority(labels)
    return aggregate_median(labels)


def agreement_labels(
    instances: Sequence[AdjudicatedInstance],
    aggregation: Aggregation,
    referable_only: bool,
    scale: GradeScale,
) -> np.ndarray:
    """1 where the aggregated grade differs from the adjudicated one.

    With `referable_only` both grades are first reduced to referable or not.
    """
    if not instances:
        raise InvalidParameterError("no adjudicated instances")
    out = np.zeros(len(instances), dtype=int)
    for i, inst in enumerate(instances):
        grade = aggregate(inst.labels, aggregation)
        if referable_only:
            out[i] = int(scale.is_referable(grade) != scale.is_referable(inst.adjudicated))
        else:
            out[i] = int(grade != inst.adjudicated)
    return out


def _distance(labels: Sequence[int], adjudicated: int, metric: TransportMetric, scale: GradeScale) -> float:
    return wasserstein_point_mass(empirical_histogram(labels, scale), adjudicated, metric, scale)


def continuous_disagreement(
    instances: Sequence[AdjudicatedInstance],
    metric: TransportMetric,
    scale: GradeScale,
) -> np.ndarray:
    """Distance from each label histogram to its adjudicated grade."""
    if not instances:
        raise InvalidParameterError("no adjudicated instances")
    return np.asarray(
        [_distance(inst.labels, inst.adjudicated, metric, scale) for inst in instances],
        dtype=float,
    )


def subsample_doctor_ranking(
    instances: Sequence[AdjudicatedInstance],
    n_doctors: int,
    metric: TransportMetric,
    ground_truth: np.ndarray,
    seed: Seed,
    repeats: int,
    scale: GradeScale,
) -> float:
    """Mean Spearman between rankings from `n_doctors` labels per instance
    (drawn without replacement) and the ground-truth ranking."""
    if n_doctors < 1 or repeats < 1:
        raise InvalidParameterError("n_doctors and repeats must be positive")
    fewest = min(len(inst.labels) for inst in instances)
    if fewest < n_doctors:
        raise InvalidParameterError(
            "too few labels to subsample", data={"n_doctors": n_doctors, "fewest": fewest}
        )
    rng = make_rng(seed)
    correlations = []
    for _ in range(repeats):
        scores = [
            _distance(rng.choice(np.asarray(inst.labels), size=n_doctors, replace=False),
                      inst.adjudicated, metric, scale)
            for inst in instances
        ]
        try:
            correlations.append(spearman(scores, ground_truth))
        except CorrelationUndefinedError:
            logger.warning("constant subsampled ranking at n=%d; repeat skipped", n_doctors)
    if not correlations:
        raise CorrelationUndefinedError("correlation undefined", data={"n_doctors": n_doctors})
    return float(np.mean(correlations))


def subsampling_curve(
    instances: Sequence[AdjudicatedInstance],
    doctor_counts: Sequence[int],
    metric: TransportMetric,
    seed: Seed,
    repeats: int,
    scale: GradeScale,
) -> List[Tuple[int, float]]:
    """(n, mean Spearman) for each n, against the all-label ranking."""
    ground_truth = continuous_disagreement(instances, metric, scale)
    seeds = spawn_seeds(seed, len(doctor_counts))
    return [
        (int(n), subsample_doctor_ranking(instances, int(n), metric, ground_truth, s, repeats, scale))
        for n, s in zip(doctor_counts, seeds)
    ]


def gaussian_adjudicated_set(
    world: GaussianMixtureWorld,
    n: int,
    labels_per_instance: int = ADJUDICATED_LABELS_PER_INSTANCE,
    seed: Seed = 0,
) -> List[AdjudicatedInstance]:
    """Heavily labeled instances whose adjudicated grade is the posterior
    argmax at the hidden observation (ties to the lower grade)."""
    if n < 1 or labels_per_instance < 1:
        raise InvalidParameterError("need at least one instance and one label")
    obs_seed, label_seed = spawn_seeds(seed, 2)
    observations = sample_observations(world, n, obs_seed)
    posteriors = posterior_matrix(world, observations)
    labels = draw_label_rows(posteriors, labels_per_instance, label_seed)
    adjudicated = np.argmax(posteriors, axis=1)
    features = obscure(observations)
    return [
        AdjudicatedInstance(
            features=tuple(float(v) for v in features[i]),
            group_id=f"a{i:06d}",
            labels=tuple(int(v) for v in labels[i]),
            adjudicated=int(adjudicated[i]),
        )
        for i in range(n)
    ]
