# label_uncertainty/oracle.py
"""
Exact oracles over discrete worlds.

h_dup(x) averages U over the posteriors of the observations hidden behind x;
h_uvc(x) applies U to their averaged posterior. Both are computed by plain
enumeration, as are the closed-form bias terms and the Wasserstein
distances used by the ranking evaluation.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, Tuple

import numpy as np
import ot

from label_uncertainty.discrete_world import DiscreteWorld
from label_uncertainty.errors import (
    BiasFormulaUnavailableError,
    InvalidParameterError,
    ShapeMismatchError,
    SupportTooLargeError,
    UnknownGradeError,
)
from label_uncertainty.models import (
    BiasEntry,
    BiasReport,
    GradeHistogram,
    GradeScale,
    TransportMetric,
    TransportPlan,
    UncertaintyKind,
    XValue,
)
from label_uncertainty.uncertainty import uncertainty_scores

# logging
logger = logging.getLogger(__name__)

MAX_TRANSPORT_SUPPORT = 12


def _scale_for(world: DiscreteWorld, scale: GradeScale | None) -> GradeScale:
    scale = scale if scale is not None else GradeScale.uniform(world.k)
    if scale.k != world.k:
        raise ShapeMismatchError("grade scale does not match world", data={"k": world.k})
    return scale


def _conditional(world: DiscreteWorld, x: XValue) -> Tuple[np.ndarray, np.ndarray]:
    if len(world.preimage(x)) == 0:
        raise InvalidParameterError("x has an empty preimage", data={"x": x})
    return world.conditional_o_given_x(x)


def exact_h_dup(
    world: DiscreteWorld, x: XValue, U: UncertaintyKind, scale: GradeScale | None = None
) -> float:
    """E[U(E[Y | O]) | g(O) = x] by enumeration over the preimage of x."""
    idx, weights = _conditional(world, x)
    scores = uncertainty_scores(world.posteriors()[idx], U, _scale_for(world, scale))
    return float(weights @ scores)


def exact_h_uvc(
    world: DiscreteWorld, x: XValue, U: UncertaintyKind, scale: GradeScale | None = None
) -> float:
    """U(E[Y | g(O) = x]) by enumeration over the preimage of x."""
    idx, weights = _conditional(world, x)
    mean_posterior = weights @ world.posteriors()[idx]
    return float(uncertainty_scores(mean_posterior, U, _scale_for(world, scale)))


def sign_check(
    world: DiscreteWorld, kind: UncertaintyKind, scale: GradeScale | None = None
) -> Dict[XValue, float]:
    """h_uvc(x) - h_dup(x) for every x; nonnegative for any concave U."""
    return {
        x: exact_h_uvc(world, x, kind, scale) - exact_h_dup(world, x, kind, scale)
        for x in world.x_values()
    }


def posterior_spread(world: DiscreteWorld, x: XValue) -> float:
    """Largest coordinate gap between posteriors sharing the obscured value x."""
    posteriors = world.posteriors()[world.preimage(x)]
    return float(np.max(posteriors.max(axis=0) - posteriors.min(axis=0)))


def _weighted_variance(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mean = weights @ values
    return weights @ ((values - mean) ** 2)


def bias_report(
    world: DiscreteWorld, kind: UncertaintyKind, scale: GradeScale | None = None
) -> BiasReport:
    """Enumerated bias of h_uvc against the closed-form posterior-variance terms."""
    if kind is UncertaintyKind.ENTROPY:
        raise BiasFormulaUnavailableError("no closed-form bias implemented", data={"kind": kind.value})
    scale = _scale_for(world, scale)
    posteriors = world.posteriors()
    entries = []
    empirical = 0.0
    formula = 0.0
    dup_average = 0.0
    for x in world.x_values():
        idx, weights = world.conditional_o_given_x(x)
        p_x = world.p_x(x)
        h_dup = exact_h_dup(world, x, kind, scale)
        h_uvc = exact_h_uvc(world, x, kind, scale)
        entries.append(BiasEntry(x=x, probability=p_x, h_dup=h_dup, h_uvc=h_uvc))
        empirical += p_x * (h_uvc - h_dup)
        dup_average += p_x * h_dup
        rows = posteriors[idx]
        if kind is UncertaintyKind.DISAGREE:
            formula += p_x * float(np.sum(_weighted_variance(rows, weights)))
        else:
            formula += p_x * float(_weighted_variance(rows @ scale.values, weights))
    truth = float(world.marginal_o() @ uncertainty_scores(posteriors, kind, scale))
    report = BiasReport(
        kind=kind,
        empirical_bias=empirical,
        formula_bias=formula,
        tower_gap=abs(dup_average - truth),
        per_x=entries,
    )
    if report.violations():
        logger.warning("bias report for %s violates %s", kind.value, report.violations())
    return report


# Wasserstein distances between grade histograms

def _cost_matrix(grades: np.ndarray, metric: TransportMetric) -> np.ndarray:
    diff = grades[:, None] - grades[None, :]
    if metric is TransportMetric.ABS:
        return np.abs(diff)
    if metric is TransportMetric.SQUARED_W2:
        return diff * diff
    return (diff != 0.0).astype(float)


def _metric(metric: TransportMetric | str) -> TransportMetric:
    try:
        return TransportMetric(metric)
    except ValueError:
        raise InvalidParameterError("unknown metric", data={"metric": str(metric)})


def wasserstein_point_mass(
    h: GradeHistogram, a: int, metric: TransportMetric | str, scale: GradeScale
) -> float:
    """Distance from `h` to the point mass at grade index `a`: the expected
    ground-metric distance from a grade drawn from `h` to grade a."""
    metric = _metric(metric)
    if not 0 <= a < scale.k:
        raise UnknownGradeError("unknown grade", data={"grade": a, "k": scale.k})
    if h.k != scale.k:
        raise ShapeMismatchError("histogram length does not match grade scale")
    expected = float(h.array() @ _cost_matrix(scale.values, metric)[:, a])
    return math.sqrt(expected) if metric is TransportMetric.SQUARED_W2 else expected


def brute_force_wasserstein(
    h1: GradeHistogram,
    h2: GradeHistogram,
    metric: TransportMetric | str,
    scale: GradeScale | None = None,
) -> Tuple[float, TransportPlan]:
    """Exact optimal transport between two small histograms (network simplex)."""
    metric = _metric(metric)
    if h1.k != h2.k:
        raise ShapeMismatchError("histograms have different lengths")
    scale = scale if scale is not None else GradeScale.uniform(h1.k)
    source, target = h1.array(), h2.array()
    rows, cols = np.flatnonzero(source > 0.0), np.flatnonzero(target > 0.0)
    if len(rows) > MAX_TRANSPORT_SUPPORT or len(cols) > MAX_TRANSPORT_SUPPORT:
        raise SupportTooLargeError(
            "transport oracle supports at most 12 points", data={"source": len(rows), "target": len(cols)}
        )
    a = source[rows]
    b = target[cols] * (a.sum() / target[cols].sum())
    cost = np.ascontiguousarray(_cost_matrix(scale.values, metric)[np.ix_(rows, cols)])
    sub_plan = np.maximum(ot.emd(a, b, cost), 0.0)
    plan = np.zeros((h1.k, h2.k))
    plan[np.ix_(rows, cols)] = sub_plan
    objective = float(np.sum(sub_plan * cost))
    value = math.sqrt(max(objective, 0.0)) if metric is TransportMetric.SQUARED_W2 else objective
    return value, TransportPlan(plan=tuple(tuple(float(p) for p in row) for row in plan), cost=value)
