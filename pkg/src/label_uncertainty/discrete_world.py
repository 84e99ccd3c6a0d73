# label_uncertainty/discrete_world.py
"""
Finite joint distributions p(o, y) with an obscuring table o -> x.

These are the ground truth behind the exact oracles: everything the oracle
computes is an enumeration over the rows of the joint table.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import norm

from label_uncertainty.datasets import Seed, make_rng
from label_uncertainty.errors import DatasetError, InvalidParameterError
from label_uncertainty.gaussian_world import GaussianMixtureWorld
from label_uncertainty.models import XValue

# logging
logger = logging.getLogger(__name__)


class DiscreteWorld(BaseModel):
    """Joint table over observations x grades plus the obscuring map g."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    observations: Tuple[XValue, ...] = Field(..., description="Observation ids o.")
    joint: np.ndarray = Field(..., description="p(o, y), rows = observations, cols = grades.")
    obscure_map: Tuple[XValue, ...] = Field(..., description="g(o) for each observation, in order.")

    @field_validator("joint", mode="before")
    @classmethod
    def _own_joint(cls, value: Any) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode="after")
    def _check(self) -> "DiscreteWorld":
        joint = self.joint
        if joint.ndim != 2 or joint.shape[0] != len(self.observations):
            raise ValueError("joint must have one row per observation")
        if joint.shape[1] < 1:
            raise ValueError("joint needs at least one grade column")
        if len(self.obscure_map) != len(self.observations):
            raise ValueError("obscure_map must be total over observations")
        if len(set(self.observations)) != len(self.observations):
            raise ValueError("observation ids must be distinct")
        if not np.all(np.isfinite(joint)) or np.any(joint < 0.0):
            raise ValueError("joint entries must be finite and nonnegative")
        if abs(joint.sum() - 1.0) > 1e-9:
            raise ValueError("joint must sum to 1")
        if np.any(joint.sum(axis=1) <= 0.0):
            raise ValueError("every observation needs positive marginal mass")
        joint.flags.writeable = False
        return self

    @property
    def k(self) -> int:
        return int(self.joint.shape[1])

    def marginal_o(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def posteriors(self) -> np.ndarray:
        """E[Y | O = o] for every observation, as rows."""
        return self.joint / self.marginal_o()[:, None]

    def x_values(self) -> List[XValue]:
        """Distinct obscured values in order of first appearance."""
        return list(dict.fromkeys(self.obscure_map))

    def preimage(self, x: XValue) -> np.ndarray:
        return np.flatnonzero(np.asarray([g == x for g in self.obscure_map], dtype=bool))

    def p_x(self, x: XValue) -> float:
        return float(self.marginal_o()[self.preimage(x)].sum())

    def conditional_o_given_x(self, x: XValue) -> Tuple[np.ndarray, np.ndarray]:
        """(indices, weights) of p(o | g(O) = x)."""
        idx = self.preimage(x)
        weights = self.marginal_o()[idx]
        return idx, weights / weights.sum()

    def to_json(self) -> Dict:
        return {
            "observations": list(self.observations),
            "joint": self.joint.tolist(),
            "obscure": list(self.obscure_map),
        }


def build_discrete_world(
    joint: Sequence[Sequence[float]] | np.ndarray,
    obscure_map: Sequence[XValue] | None = None,
    observations: Sequence[XValue] | None = None,
) -> DiscreteWorld:
    """Normalize a nonnegative table and attach the obscuring map
    (identity when omitted)."""
    table = np.array(joint, dtype=float)
    if table.ndim != 2 or table.size == 0:
        raise InvalidParameterError("joint table must be a nonempty matrix")
    if not np.all(np.isfinite(table)) or np.any(table < 0.0):
        raise InvalidParameterError("joint table entries must be finite and nonnegative")
    total = table.sum()
    if total <= 0.0:
        raise InvalidParameterError("joint table is all zero")
    obs = tuple(observations) if observations is not None else tuple(range(table.shape[0]))
    g = tuple(obscure_map) if obscure_map is not None else obs
    try:
        return DiscreteWorld(observations=obs, joint=table / total, obscure_map=g)
    except ValueError as e:
        raise InvalidParameterError(f"invalid discrete world: {e}")


def load_discrete_world(path: str | Path) -> DiscreteWorld:
    """Read `{"joint": [[...]], "obscure": [...], "observations": [...]}`."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return build_discrete_world(
            payload["joint"], payload.get("obscure"), payload.get("observations")
        )
    except FileNotFoundError:
        raise DatasetError("world file not found", data={"path": str(path)})
    except (ValueError, KeyError, TypeError, InvalidParameterError) as e:
        raise DatasetError(f"malformed world file: {e}", data={"path": str(path)})


def random_discrete_world(seed: Seed, max_obs: int = 8, max_grades: int = 5) -> DiscreteWorld:
    """A random world with 2..max_obs observations and 2..max_grades grades;
    obscured values collide at random."""
    rng = make_rng(seed)
    n_obs = int(rng.integers(2, max_obs + 1))
    k = int(rng.integers(2, max_grades + 1))
    n_x = int(rng.integers(1, n_obs + 1))
    table = rng.random((n_obs, k))
    g = tuple(int(v) for v in rng.integers(0, n_x, size=n_obs))
    return build_discrete_world(table, g)


def discretize_gaussian_world(
    world: GaussianMixtureWorld, spacing: float = 0.01, limit: float = 6.0
) -> DiscreteWorld:
    """Grid a 1D mixture on [-limit, limit]; g(o) = |o| rounded onto the grid."""
    if world.dim != 1:
        raise InvalidParameterError("grid discretization is one-dimensional", data={"dim": world.dim})
    steps = int(round(limit / spacing))
    grid = np.arange(-steps, steps + 1) * spacing
    centers = world.centers_array()[:, 0]
    density = norm.pdf(grid[:, None], loc=centers[None, :], scale=np.sqrt(world.variance))
    table = density * world.weights_array()[None, :] * spacing
    observations = tuple(int(i) for i in range(-steps, steps + 1))
    g = tuple(round(abs(i) * spacing, 10) for i in range(-steps, steps + 1))
    logger.debug("discretized 1D mixture onto %d grid points", len(grid))
    return build_discrete_world(table, g, observations)
