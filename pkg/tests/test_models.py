# tests/test_models.py
"""
Unit tests for the pydantic value types.
"""
import pytest
from pydantic import ValidationError

from label_uncertainty.models import (
    BiasEntry,
    BiasReport,
    GradeHistogram,
    GradeScale,
    LabeledInstance,
    RankingReport,
    TrainConfig,
    TrainMode,
    TransportPlan,
    UncertaintyKind,
    UncertaintySpec,
)


class TestGradeScale:
    """Ordered grade values and the referable cut."""

    def test_five_point(self, dr_scale):
        """The clinical scale has grades 1..5 and refers from grade 3."""
        assert dr_scale.k == 5
        assert dr_scale.grades == (1.0, 2.0, 3.0, 4.0, 5.0)
        assert not dr_scale.is_referable(1)
        assert dr_scale.is_referable(2)

    def test_uniform_default_cut(self):
        """Uniform scales cut at the middle grade."""
        scale = GradeScale.uniform(4)
        assert scale.grades == (0.0, 1.0, 2.0, 3.0)
        assert scale.referable_threshold == 2

    def test_rejects_single_grade(self):
        """A scale needs at least two grades."""
        with pytest.raises(ValidationError):
            GradeScale(grades=(1.0,), referable_threshold=0)

    def test_rejects_unsorted_grades(self):
        """Grades must be strictly increasing."""
        with pytest.raises(ValidationError):
            GradeScale(grades=(1.0, 1.0, 2.0), referable_threshold=0)

    def test_rejects_out_of_range_cut(self):
        """The referable cut must index into the grades."""
        with pytest.raises(ValidationError):
            GradeScale(grades=(1.0, 2.0), referable_threshold=2)


class TestGradeHistogram:
    """Normalized mass over grades."""

    def test_valid(self):
        """Masses summing to one are accepted."""
        h = GradeHistogram(mass=(0.25, 0.75))
        assert h.k == 2

    def test_rejects_bad_sum(self):
        """Mass must sum to one within tolerance."""
        with pytest.raises(ValidationError):
            GradeHistogram(mass=(0.5, 0.6))

    def test_rejects_negative(self):
        """Mass must be nonnegative."""
        with pytest.raises(ValidationError):
            GradeHistogram(mass=(1.5, -0.5))

    def test_count_granularity(self):
        """With a count, masses must be multiples of 1/count."""
        GradeHistogram(mass=(2 / 3, 1 / 3), count=3)
        with pytest.raises(ValidationError):
            GradeHistogram(mass=(0.5, 0.5), count=3)

    def test_point_mass(self):
        """point_mass puts all mass on one grade."""
        assert GradeHistogram.point_mass(2, 4).mass == (0.0, 0.0, 1.0, 0.0)


class TestUncertaintySpec:
    """Kinds with their binarization cuts."""

    def test_defaults(self):
        """Default cuts follow the clinical task conventions."""
        assert UncertaintySpec.default(UncertaintyKind.DISAGREE).threshold == 0.3
        assert UncertaintySpec.default(UncertaintyKind.VARIANCE).threshold == pytest.approx(2 / 9)

    def test_upper_bounds(self, dr_scale):
        """Attainable maxima of each kind on the 5-point scale."""
        assert UncertaintySpec(kind="disagree", threshold=0).upper_bound(dr_scale) == pytest.approx(0.8)
        assert UncertaintySpec(kind="variance", threshold=0).upper_bound(dr_scale) == pytest.approx(4.0)
        assert UncertaintySpec(kind="entropy", threshold=0).upper_bound(dr_scale) == pytest.approx(1.6094379)

    def test_rejects_negative_threshold(self):
        """Thresholds are nonnegative."""
        with pytest.raises(ValidationError):
            UncertaintySpec(kind="disagree", threshold=-0.1)

    def test_attainability(self, dr_scale):
        """A disagree cut above 1 - 1/k is unreachable."""
        assert not UncertaintySpec(kind="disagree", threshold=0.9).is_attainable(dr_scale)


class TestLabeledInstance:
    """Consistency between labels, histogram and targets."""

    def test_histogram_must_match_labels(self):
        """A histogram that does not summarize the labels is rejected."""
        with pytest.raises(ValidationError):
            LabeledInstance(
                features=(0.0,),
                group_id="g",
                labels=(0, 0, 1),
                histogram=GradeHistogram(mass=(1 / 3, 2 / 3), count=3),
            )

    def test_targets_binary(self):
        """Targets must be 0 or 1."""
        with pytest.raises(ValidationError):
            LabeledInstance(
                features=(0.0,),
                group_id="g",
                labels=(0,),
                histogram=GradeHistogram(mass=(1.0, 0.0), count=1),
                targets={UncertaintyKind.DISAGREE: 2},
            )


class TestReports:
    """Oracle and ranking reports."""

    def test_bias_report_clean(self):
        """A consistent report has no violations."""
        report = BiasReport(
            kind="disagree",
            empirical_bias=0.5,
            formula_bias=0.5,
            tower_gap=0.0,
            per_x=[BiasEntry(x="x", probability=1.0, h_dup=0.0, h_uvc=0.5)],
        )
        assert report.violations() == []

    def test_bias_report_violations(self):
        """Negative bias, formula mismatch and tower gaps are all reported."""
        report = BiasReport(
            kind="variance",
            empirical_bias=-0.1,
            formula_bias=0.2,
            tower_gap=1e-6,
            per_x=[BiasEntry(x=0, probability=1.0, h_dup=0.3, h_uvc=0.2)],
        )
        assert report.violations() == ["sign", "pointwise-sign", "corollary", "tower"]

    def test_transport_plan_marginals(self):
        """check_marginals compares row and column sums."""
        plan = TransportPlan(plan=((0.5, 0.0), (0.25, 0.25)), cost=0.25)
        assert plan.check_marginals([0.5, 0.5], [0.75, 0.25])
        assert not plan.check_marginals([0.5, 0.5], [0.5, 0.5])

    def test_transport_plan_nonnegative(self):
        """Plans cannot carry negative mass."""
        with pytest.raises(ValidationError):
            TransportPlan(plan=((-0.1, 1.1),), cost=0.0)

    def test_ranking_report_lengths(self):
        """Scores and targets must both have length n."""
        with pytest.raises(ValidationError):
            RankingReport(scores=(0.1, 0.2), targets=(1.0,), n=2)


class TestTrainConfig:
    """Optimizer settings."""

    def test_defaults(self):
        """Defaults match the reference training recipe."""
        config = TrainConfig(mode=TrainMode.DUP)
        assert config.learning_rate == 0.01
        assert config.momentum == 0.9
        assert config.batch_size == 32
        assert config.validation_fraction == 0.1
        assert config.hidden == (300, 300)

    def test_validation_fraction_bound(self):
        """At most half the groups can be held out."""
        with pytest.raises(ValidationError):
            TrainConfig(mode="uvc", validation_fraction=0.5)

    def test_negative_learning_rate(self):
        """Negative learning rates are rejected."""
        with pytest.raises(ValidationError):
            TrainConfig(mode="dup", learning_rate=-0.01)
