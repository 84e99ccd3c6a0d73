# label_uncertainty/uncertainty.py
"""
Grade histograms and the concave uncertainty scores U(.) over them.

Scalar functions take a GradeHistogram; `uncertainty_scores` applies the same
functions row-wise to a matrix of distributions (model outputs).
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy.special import entr

from label_uncertainty.errors import (
    EmptyLabelsError,
    InvalidParameterError,
    NonFiniteInputError,
    ShapeMismatchError,
    UnknownGradeError,
)
from label_uncertainty.models import (
    GradeHistogram,
    GradeScale,
    UncertaintyKind,
    UncertaintySpec,
)


def empirical_histogram(labels: Iterable[int], scale: GradeScale) -> GradeHistogram:
    """Fraction of labels at each grade of `scale`."""
    values = list(labels)
    if not values:
        raise EmptyLabelsError("no labels")
    for label in values:
        if not 0 <= label < scale.k:
            raise UnknownGradeError("unknown grade", data={"label": label, "k": scale.k})
    counts = np.bincount(np.asarray(values, dtype=int), minlength=scale.k)
    return GradeHistogram.from_array(counts / len(values), count=len(values))


def _disagree(mass: np.ndarray) -> np.ndarray:
    return 1.0 - np.sum(mass * mass, axis=-1)


def _variance(mass: np.ndarray, grades: np.ndarray) -> np.ndarray:
    mean = mass @ grades
    # sum c^2 p - (sum c p)^2, evaluated in centered form
    centered = grades - np.expand_dims(mean, -1)
    return np.maximum(np.sum(mass * centered * centered, axis=-1), 0.0)


def _entropy(mass: np.ndarray) -> np.ndarray:
    return np.sum(entr(mass), axis=-1)


def u_disagree(h: GradeHistogram) -> float:
    """Probability that two independent draws from `h` differ."""
    return float(_disagree(h.array()))


def u_var(h: GradeHistogram, scale: GradeScale) -> float:
    """Variance of the grade value under `h`."""
    if h.k != scale.k:
        raise ShapeMismatchError(
            "histogram length does not match grade scale", data={"k": h.k, "scale_k": scale.k}
        )
    return float(_variance(h.array(), scale.values))


def u_entropy(h: GradeHistogram) -> float:
    """Shannon entropy of `h` in nats."""
    return float(_entropy(h.array()))


def uncertainty(h: GradeHistogram, kind: UncertaintyKind, scale: GradeScale | None = None) -> float:
    """Dispatch to the U selected by `kind`."""
    if kind is UncertaintyKind.DISAGREE:
        return u_disagree(h)
    if kind is UncertaintyKind.ENTROPY:
        return u_entropy(h)
    return u_var(h, scale if scale is not None else GradeScale.uniform(h.k))


def uncertainty_scores(
    mass: np.ndarray, kind: UncertaintyKind, scale: GradeScale | None = None
) -> np.ndarray:
    """Row-wise U over an (n, k) matrix of probability vectors."""
    mass = np.asarray(mass, dtype=float)
    if kind is UncertaintyKind.DISAGREE:
        return _disagree(mass)
    if kind is UncertaintyKind.ENTROPY:
        return _entropy(mass)
    scale = scale if scale is not None else GradeScale.uniform(mass.shape[-1])
    if mass.shape[-1] != scale.k:
        raise ShapeMismatchError("distribution width does not match grade scale")
    return _variance(mass, scale.values)


def binarize(score: float, spec: UncertaintySpec) -> int:
    """1 when `score` is strictly above `spec.threshold`, else 0."""
    if math.isnan(score):
        raise NonFiniteInputError("score is NaN")
    return int(score > spec.threshold)


def check_spec(spec: UncertaintySpec, scale: GradeScale) -> UncertaintySpec:
    """Reject thresholds no histogram on `scale` can reach."""
    if not spec.is_attainable(scale):
        raise InvalidParameterError(
            "threshold outside the attainable range",
            data={"kind": spec.kind.value, "threshold": spec.threshold, "max": spec.upper_bound(scale)},
        )
    return spec
