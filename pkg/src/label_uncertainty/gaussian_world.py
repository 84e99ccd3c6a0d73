# label_uncertainty/gaussian_world.py
"""
Gaussian mixture worlds with an obscuring map x = |o|.

Labels for an observation o are drawn from the mixture posterior over
components, so the component index plays the role of the grade.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import softmax

from label_uncertainty.datasets import Seed, build_instance, make_rng, spawn_seeds, target_specs
from label_uncertainty.errors import InvalidParameterError, NonFiniteInputError, ShapeMismatchError
from label_uncertainty.models import (
    GAUSSIAN_DISAGREE_THRESHOLD,
    GAUSSIAN_THRESHOLDS,
    GradeHistogram,
    GradeScale,
    LabeledInstance,
    UncertaintyKind,
    UncertaintySpec,
)

# logging
logger = logging.getLogger(__name__)

GAUSSIAN_LABELS_PER_INSTANCE = 5


class GaussianMixtureWorld(BaseModel):
    """Isotropic Gaussian mixture: f(o, y=i) = q_i N(o; mu_i, sigma^2 I)."""
    model_config = ConfigDict(frozen=True)

    centers: Tuple[Tuple[float, ...], ...] = Field(..., description="Component means mu_i.")
    weights: Tuple[float, ...] = Field(..., description="Mixture probabilities q_i.")
    variance: float = Field(1.0, gt=0.0, description="Shared isotropic variance sigma^2.")

    @model_validator(mode="after")
    def _check(self) -> "GaussianMixtureWorld":
        if len(self.centers) < 2:
            raise ValueError("a mixture needs at least two components")
        if len(self.weights) != len(self.centers):
            raise ValueError("one weight per center")
        if len({len(c) for c in self.centers}) != 1 or len(self.centers[0]) < 1:
            raise ValueError("centers must share a positive dimension")
        if any(q <= 0.0 for q in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if len(set(self.centers)) != len(self.centers):
            raise ValueError("centers must be pairwise distinct")
        return self

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    @property
    def m(self) -> int:
        return len(self.centers)

    @property
    def scale(self) -> GradeScale:
        return GradeScale.uniform(self.m)

    def centers_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def sample_gaussian_world(d: int, m: int, seed: Seed) -> GaussianMixtureWorld:
    """m centers iid from N(0, I/d) so each has unit expected squared norm."""
    if d < 1:
        raise InvalidParameterError("dimension must be at least 1", data={"d": d})
    if m < 2:
        raise InvalidParameterError("need at least two components", data={"m": m})
    centers = make_rng(seed).normal(0.0, np.sqrt(1.0 / d), size=(m, d))
    return GaussianMixtureWorld(
        centers=tuple(tuple(float(v) for v in row) for row in centers),
        weights=tuple([1.0 / m] * m),
        variance=1.0,
    )


def posterior_matrix(world: GaussianMixtureWorld, observations: np.ndarray) -> np.ndarray:
    """Posterior over components for each row of an (n, d) matrix."""
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if obs.shape[1] != world.dim:
        raise ShapeMismatchError("observation dimension mismatch", data={"d": world.dim})
    if not np.all(np.isfinite(obs)):
        raise NonFiniteInputError("observation is not finite")
    diff = obs[:, None, :] - world.centers_array()[None, :, :]
    log_joint = np.log(world.weights_array())[None, :] - 0.5 * np.sum(diff * diff, axis=-1) / world.variance
    return softmax(log_joint, axis=1)


def gm_posterior(world: GaussianMixtureWorld, o: np.ndarray) -> GradeHistogram:
    """f(y = l | o) = q_l f_l(o) / sum_i q_i f_i(o)."""
    return GradeHistogram.from_array(posterior_matrix(world, np.asarray(o, dtype=float).reshape(1, -1))[0])


def obscure(o: np.ndarray) -> np.ndarray:
    """The obscuring map g(o) = |o|, componentwise."""
    return np.abs(np.asarray(o, dtype=float))


def sample_observations(world: GaussianMixtureWorld, n: int, seed: Seed) -> np.ndarray:
    rng = make_rng(seed)
    components = rng.choice(world.m, size=n, p=world.weights_array())
    noise = rng.standard_normal((n, world.dim)) * np.sqrt(world.variance)
    return world.centers_array()[components] + noise


def draw_label_rows(mass: np.ndarray, n: int, seed: Seed) -> np.ndarray:
    """n iid grade draws from every row of an (r, k) matrix of distributions."""
    rng = make_rng(seed)
    mass = np.atleast_2d(np.asarray(mass, dtype=float))
    cdf = np.cumsum(mass, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((mass.shape[0], n))
    labels = np.sum(u[:, :, None] >= cdf[:, None, :], axis=2)
    return np.minimum(labels, mass.shape[1] - 1)


def draw_labels(h: GradeHistogram, n: int, seed: Seed) -> Tuple[int, ...]:
    """n iid draws from `h`, deterministic in the seed."""
    if n < 1:
        raise InvalidParameterError("need at least one label", data={"n": n})
    return tuple(int(v) for v in draw_label_rows(h.array(), n, seed)[0])


def gen_gaussian_dataset(
    world: GaussianMixtureWorld,
    n_instances: int,
    labels_per_instance: int = GAUSSIAN_LABELS_PER_INSTANCE,
    spec: UncertaintySpec = UncertaintySpec(
        kind=UncertaintyKind.DISAGREE, threshold=GAUSSIAN_DISAGREE_THRESHOLD
    ),
    seed: Seed = 0,
) -> List[LabeledInstance]:
    """Sample o, expose x = |o|, label from the posterior at o, binarize U."""
    if n_instances < 1:
        raise InvalidParameterError("need at least one instance", data={"n_instances": n_instances})
    if labels_per_instance < 1:
        raise InvalidParameterError("need at least one label per instance")
    obs_seed, label_seed = spawn_seeds(seed, 2)
    observations = sample_observations(world, n_instances, obs_seed)
    labels = draw_label_rows(posterior_matrix(world, observations), labels_per_instance, label_seed)
    features = obscure(observations)
    specs = target_specs(spec, GAUSSIAN_THRESHOLDS)
    scale = world.scale
    instances = [
        build_instance(features[i], f"g{i:06d}", labels[i], scale, specs)
        for i in range(n_instances)
    ]
    positives = sum(inst.targets[spec.kind] for inst in instances)
    logger.debug("generated %d gaussian instances, %d positive", n_instances, positives)
    return instances
