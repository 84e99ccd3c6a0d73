# tests/test_oracle.py
"""
Tests for the exact oracles, bias reports and transport distances.
"""
import math

import numpy as np
import pytest
from scipy.special import expit

from label_uncertainty.discrete_world import discretize_gaussian_world, random_discrete_world
from label_uncertainty.errors import (
    BiasFormulaUnavailableError,
    InvalidParameterError,
    SupportTooLargeError,
    UnknownGradeError,
)
from label_uncertainty.models import GradeHistogram, GradeScale, TransportMetric, UncertaintyKind
from label_uncertainty.oracle import (
    bias_report,
    brute_force_wasserstein,
    exact_h_dup,
    exact_h_uvc,
    posterior_spread,
    sign_check,
    wasserstein_point_mass,
)


class TestExactOracles:
    """h_dup and h_uvc by enumeration."""

    def test_w2_disagree(self, world_w2):
        assert exact_h_dup(world_w2, "x", UncertaintyKind.DISAGREE) == pytest.approx(0.0)
        assert exact_h_uvc(world_w2, "x", UncertaintyKind.DISAGREE) == pytest.approx(0.5)

    def test_w2_spread(self, world_w2):
        assert posterior_spread(world_w2, "x") == pytest.approx(1.0)

    def test_injective_world_agrees(self, injective_world):
        for kind in (UncertaintyKind.DISAGREE, UncertaintyKind.VARIANCE, UncertaintyKind.ENTROPY):
            gaps = sign_check(injective_world, kind)
            assert all(gap == pytest.approx(0.0, abs=1e-12) for gap in gaps.values())

    def test_unknown_x(self, world_w2):
        with pytest.raises(InvalidParameterError):
            exact_h_dup(world_w2, "y", UncertaintyKind.DISAGREE)

    @pytest.mark.parametrize("kind", list(UncertaintyKind))
    def test_sign_on_random_worlds(self, kind):
        """UVC never reports less uncertainty than DUP for a concave U."""
        for seed in range(25):
            gaps = sign_check(random_discrete_world(seed), kind)
            assert min(gaps.values()) >= -1e-12

    @pytest.mark.parametrize("kind", list(UncertaintyKind))
    def test_strict_gap_when_posteriors_differ(self, kind):
        """Every world that hides differing posteriors behind one x shows a
        strictly positive gap at some x. Variance only sees the posterior
        means, so for it the means must differ."""
        checked = 0
        for seed in range(100):
            world = random_discrete_world(seed)
            posteriors = world.posteriors()
            if kind is UncertaintyKind.VARIANCE:
                posteriors = posteriors @ np.arange(world.k, dtype=float)[:, None]
            mixed = [
                x for x in world.x_values()
                if np.ptp(posteriors[world.preimage(x)], axis=0).max() > 0.05
            ]
            if not mixed:
                continue
            gaps = sign_check(world, kind)
            assert max(gaps[x] for x in mixed) > 1e-6
            checked += 1
        assert checked > 10

    def test_strict_gap_on_point_masses(self, world_w2):
        for kind in (UncertaintyKind.DISAGREE, UncertaintyKind.VARIANCE, UncertaintyKind.ENTROPY):
            assert sign_check(world_w2, kind)["x"] > 1e-6


class TestBiasReport:
    """Enumerated bias against the posterior-variance formulas."""

    def test_w2(self, world_w2):
        report = bias_report(world_w2, UncertaintyKind.DISAGREE)
        assert report.empirical_bias == pytest.approx(0.5)
        assert report.formula_bias == pytest.approx(0.5)
        assert report.tower_gap == pytest.approx(0.0, abs=1e-12)
        assert report.violations() == []
        assert len(report.per_x) == 1

    def test_w2_variance(self, world_w2):
        report = bias_report(world_w2, UncertaintyKind.VARIANCE)
        assert report.empirical_bias == pytest.approx(0.25)
        assert report.formula_bias == pytest.approx(0.25)

    def test_injective_zero(self, injective_world):
        report = bias_report(injective_world, UncertaintyKind.DISAGREE)
        assert report.empirical_bias == pytest.approx(0.0, abs=1e-12)
        assert report.formula_bias == pytest.approx(0.0, abs=1e-12)

    def test_entropy_unavailable(self, world_w2):
        with pytest.raises(BiasFormulaUnavailableError):
            bias_report(world_w2, UncertaintyKind.ENTROPY)

    @pytest.mark.parametrize("kind", [UncertaintyKind.DISAGREE, UncertaintyKind.VARIANCE])
    def test_identities_on_random_worlds(self, kind):
        """Tower property and the closed-form bias hold on random worlds."""
        for seed in range(50):
            report = bias_report(random_discrete_world(seed), kind)
            assert report.tower_gap < 1e-9
            assert report.empirical_bias == pytest.approx(report.formula_bias, abs=1e-9)
            assert report.violations() == []


class TestDiscretizedGaussian:
    """Oracles on the gridded symmetric two-Gaussian world."""

    @pytest.fixture
    def grid_world(self, two_gaussians):
        return discretize_gaussian_world(two_gaussians, spacing=0.01, limit=6.0)

    def test_uvc_is_flat(self, grid_world):
        """|o| hides the sign, so the averaged posterior is always uniform."""
        for x in (0.0, 0.5, 1.0, 3.0):
            assert exact_h_uvc(grid_world, x, UncertaintyKind.DISAGREE) == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0])
    def test_dup_matches_logistic(self, grid_world, x):
        p = expit(2.0 * x)
        assert exact_h_dup(grid_world, x, UncertaintyKind.DISAGREE) == pytest.approx(2 * p * (1 - p), abs=1e-4)


class TestWassersteinPointMass:
    """Distance to a point mass is the expected ground distance."""

    @pytest.mark.parametrize(
        "metric, expected",
        [(TransportMetric.ABS, 1.0), (TransportMetric.SQUARED_W2, math.sqrt(2.0)), (TransportMetric.BINARY, 0.5)],
    )
    def test_example(self, dr_scale, metric, expected):
        h = GradeHistogram(mass=(0.5, 0.0, 0.5, 0.0, 0.0))
        assert wasserstein_point_mass(h, 0, metric, dr_scale) == pytest.approx(expected)

    def test_zero_at_own_grade(self, dr_scale):
        h = GradeHistogram.point_mass(3, 5)
        assert wasserstein_point_mass(h, 3, "abs", dr_scale) == 0.0

    def test_unknown_grade(self, dr_scale):
        with pytest.raises(UnknownGradeError):
            wasserstein_point_mass(GradeHistogram.point_mass(0, 5), 5, "abs", dr_scale)

    def test_unknown_metric(self, dr_scale):
        with pytest.raises(InvalidParameterError):
            wasserstein_point_mass(GradeHistogram.point_mass(0, 5), 0, "cosine", dr_scale)


class TestBruteForceWasserstein:
    """Exact transport on small supports."""

    @pytest.mark.parametrize("metric", list(TransportMetric))
    def test_matches_point_mass(self, dr_scale, rng, metric):
        for _ in range(10):
            h = GradeHistogram.from_array(rng.dirichlet(np.ones(5)))
            a = int(rng.integers(5))
            value, plan = brute_force_wasserstein(h, GradeHistogram.point_mass(a, 5), metric, dr_scale)
            assert value == pytest.approx(wasserstein_point_mass(h, a, metric, dr_scale), abs=1e-9)
            assert plan.array()[:, a] == pytest.approx(h.array(), abs=1e-9)

    def test_identical(self, dr_scale):
        h = GradeHistogram(mass=(0.1, 0.2, 0.3, 0.2, 0.2))
        value, plan = brute_force_wasserstein(h, h, "abs", dr_scale)
        assert value == pytest.approx(0.0, abs=1e-12)
        assert np.diag(plan.array()) == pytest.approx(h.array(), abs=1e-9)

    def test_symmetric(self, dr_scale, rng):
        for _ in range(10):
            p, q = (GradeHistogram.from_array(m) for m in rng.dirichlet(np.ones(5), size=2))
            forward, _ = brute_force_wasserstein(p, q, "squared_w2", dr_scale)
            backward, _ = brute_force_wasserstein(q, p, "squared_w2", dr_scale)
            assert forward == pytest.approx(backward, abs=1e-9)

    def test_marginals(self, dr_scale, rng):
        p, q = (GradeHistogram.from_array(m) for m in rng.dirichlet(np.ones(5), size=2))
        _, plan = brute_force_wasserstein(p, q, "abs", dr_scale)
        assert plan.check_marginals(p.array(), q.array())

    def test_adjacent_shift(self):
        """Moving all mass one grade costs one unit under abs."""
        value, _ = brute_force_wasserstein(
            GradeHistogram(mass=(0.5, 0.5, 0.0)), GradeHistogram(mass=(0.0, 0.5, 0.5)), "abs", GradeScale.uniform(3)
        )
        assert value == pytest.approx(1.0)

    def test_support_too_large(self):
        h = GradeHistogram(mass=(1 / 13,) * 13)
        with pytest.raises(SupportTooLargeError):
            brute_force_wasserstein(h, h, "abs")
