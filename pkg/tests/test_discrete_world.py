# tests/test_discrete_world.py
"""
Tests for finite joint-distribution worlds.
"""
import json

import numpy as np
import pytest

from label_uncertainty.discrete_world import (
    DiscreteWorld,
    build_discrete_world,
    discretize_gaussian_world,
    load_discrete_world,
    random_discrete_world,
)
from label_uncertainty.errors import DatasetError, InvalidParameterError


class TestBuildDiscreteWorld:
    """Normalization and validation of joint tables."""

    def test_uniform_identity(self):
        world = build_discrete_world([[0.25, 0.25], [0.25, 0.25]])
        assert world.k == 2
        assert world.x_values() == [0, 1]

    def test_negative_entry(self):
        with pytest.raises(InvalidParameterError):
            build_discrete_world([[0.5, -0.1], [0.3, 0.3]])

    def test_all_zero(self):
        with pytest.raises(InvalidParameterError):
            build_discrete_world([[0.0, 0.0], [0.0, 0.0]])

    def test_normalizes(self):
        world = build_discrete_world([[2.0, 0.0], [0.0, 2.0]])
        assert world.joint.tolist() == [[0.5, 0.0], [0.0, 0.5]]

    def test_zero_marginal_row(self):
        """Every observation needs positive mass."""
        with pytest.raises(InvalidParameterError):
            build_discrete_world([[1.0, 0.0], [0.0, 0.0]])

    def test_joint_read_only(self, world_w2):
        with pytest.raises(ValueError):
            world_w2.joint[0, 0] = 1.0

    def test_caller_array_untouched(self):
        joint = np.array([[0.5, 0.0], [0.0, 0.5]])
        world = DiscreteWorld(observations=(0, 1), joint=joint, obscure_map=(0, 0))
        assert joint.flags.writeable
        joint[0, 0] = 0.25
        assert world.joint[0, 0] == 0.5


class TestConditionals:
    """Marginals, posteriors and preimages."""

    def test_posteriors_normalized(self, rng):
        world = random_discrete_world(rng)
        assert world.posteriors().sum(axis=1) == pytest.approx(np.ones(len(world.observations)), abs=1e-12)

    def test_preimage_and_p_x(self, world_w2):
        assert world_w2.preimage("x").tolist() == [0, 1]
        assert world_w2.p_x("x") == pytest.approx(1.0)
        idx, weights = world_w2.conditional_o_given_x("x")
        assert weights.tolist() == [0.5, 0.5]


class TestRandomWorlds:
    """Seeded random worlds."""

    def test_bounds(self):
        for seed in range(20):
            world = random_discrete_world(seed)
            assert 2 <= len(world.observations) <= 8
            assert 2 <= world.k <= 5

    def test_deterministic(self):
        a, b = random_discrete_world(3), random_discrete_world(3)
        assert np.array_equal(a.joint, b.joint)
        assert a.obscure_map == b.obscure_map


class TestLoadWorld:
    """JSON world files."""

    def test_round_trip(self, tmp_path, world_w2):
        path = tmp_path / "w2.json"
        path.write_text(json.dumps(world_w2.to_json()))
        loaded = load_discrete_world(path)
        assert np.array_equal(loaded.joint, world_w2.joint)
        assert loaded.obscure_map == ("x", "x")

    def test_missing(self, tmp_path):
        with pytest.raises(DatasetError):
            load_discrete_world(tmp_path / "nope.json")

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"joint": [[1, -1]]}')
        with pytest.raises(DatasetError):
            load_discrete_world(path)


class TestDiscretizeGaussian:
    """Grid discretization of 1D mixtures."""

    def test_grid(self, two_gaussians):
        world = discretize_gaussian_world(two_gaussians, spacing=0.01, limit=6.0)
        assert len(world.observations) == 1201
        assert len(world.x_values()) == 601
        assert world.preimage(0.5).tolist() == [550, 650]

    def test_needs_one_dimension(self):
        from label_uncertainty.gaussian_world import sample_gaussian_world

        with pytest.raises(InvalidParameterError):
            discretize_gaussian_world(sample_gaussian_world(2, 2, seed=0))
