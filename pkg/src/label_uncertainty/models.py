# label_uncertainty/models.py
# Pydantic value types shared by every module: grade scales, histograms,
# uncertainty specs, labeled instances, and the oracle/evaluation reports.
from __future__ import annotations

import math
from enum import Enum
from typing import Dict, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

HISTOGRAM_TOLERANCE = 1e-9
BIAS_SIGN_TOLERANCE = 1e-12
BIAS_FORMULA_TOLERANCE = 1e-10
TOWER_TOLERANCE = 1e-12

XValue = Union[int, float, str]


class UncertaintyKind(str, Enum):
    """Concave uncertainty scoring functions over grade histograms."""
    DISAGREE = "disagree"
    VARIANCE = "variance"
    ENTROPY = "entropy"


class TrainMode(str, Enum):
    """DUP learns binarized uncertainty directly; UVC learns the histogram."""
    DUP = "dup"
    UVC = "uvc"


class TransportMetric(str, Enum):
    """Ground metrics for the Wasserstein distance between grades."""
    ABS = "abs"
    SQUARED_W2 = "squared_w2"
    BINARY = "binary"


class Aggregation(str, Enum):
    """Ways of collapsing a label multiset into one grade."""
    MAJORITY = "majority"
    MEDIAN = "median"


# Binarization cuts: 0.3 and 2/9 for the clinical-style tasks, 0.5 for the
# Gaussian mixture worlds. The entropy cut puts one dissenting label out of
# five on the positive side, like the disagree cut does.
DEFAULT_THRESHOLDS: Dict[UncertaintyKind, float] = {
    UncertaintyKind.DISAGREE: 0.3,
    UncertaintyKind.VARIANCE: 2.0 / 9.0,
    UncertaintyKind.ENTROPY: 0.5,
}
GAUSSIAN_DISAGREE_THRESHOLD = 0.5
GAUSSIAN_THRESHOLDS: Dict[UncertaintyKind, float] = {
    **DEFAULT_THRESHOLDS,
    UncertaintyKind.DISAGREE: GAUSSIAN_DISAGREE_THRESHOLD,
}


class GradeScale(BaseModel):
    """Ordered grade values c_1 < ... < c_k and the referable cut."""
    model_config = ConfigDict(frozen=True)

    grades: Tuple[float, ...] = Field(
        ..., description="Strictly increasing real grade values."
    )
    referable_threshold: int = Field(
        ..., description="Index of the first grade counted as referable."
    )

    @model_validator(mode="after")
    def _check(self) -> "GradeScale":
        if len(self.grades) < 2:
            raise ValueError("a grade scale needs at least two grades")
        if any(not math.isfinite(g) for g in self.grades):
            raise ValueError("grades must be finite")
        if any(b <= a for a, b in zip(self.grades, self.grades[1:])):
            raise ValueError("grades must be strictly increasing")
        if not 0 <= self.referable_threshold < len(self.grades):
            raise ValueError("referable_threshold must index into grades")
        return self

    @property
    def k(self) -> int:
        return len(self.grades)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.grades, dtype=float)

    def is_referable(self, index: int) -> bool:
        return index >= self.referable_threshold

    @classmethod
    def uniform(cls, k: int, referable_threshold: int | None = None) -> "GradeScale":
        """Grades 0..k-1; the referable cut defaults to the middle grade."""
        cut = k // 2 if referable_threshold is None else referable_threshold
        return cls(grades=tuple(float(i) for i in range(k)), referable_threshold=cut)

    @classmethod
    def five_point(cls) -> "GradeScale":
        """The 5-point clinical scale: grades 1..5, referable from grade 3."""
        return cls(grades=(1.0, 2.0, 3.0, 4.0, 5.0), referable_threshold=2)


class GradeHistogram(BaseModel):
    """Normalized probability mass over the k grades of a scale."""
    model_config = ConfigDict(frozen=True)

    mass: Tuple[float, ...] = Field(
        ..., description="Nonnegative probability mass per grade; sums to 1."
    )
    count: int | None = Field(
        None, description="Number of raw labels summarized, when empirical."
    )

    @model_validator(mode="after")
    def _check(self) -> "GradeHistogram":
        if len(self.mass) < 1:
            raise ValueError("histogram must have at least one grade")
        if any(not math.isfinite(m) or m < 0.0 for m in self.mass):
            raise ValueError("histogram entries must be finite and nonnegative")
        if abs(math.fsum(self.mass) - 1.0) > HISTOGRAM_TOLERANCE:
            raise ValueError("histogram mass must sum to 1")
        if self.count is not None:
            if self.count < 1:
                raise ValueError("count must be positive")
            for m in self.mass:
                scaled = m * self.count
                if abs(scaled - round(scaled)) > HISTOGRAM_TOLERANCE * self.count:
                    raise ValueError("entries must be multiples of 1/count")
        return self

    @property
    def k(self) -> int:
        return len(self.mass)

    def array(self) -> np.ndarray:
        return np.asarray(self.mass, dtype=float)

    @classmethod
    def from_array(cls, mass: np.ndarray, count: int | None = None) -> "GradeHistogram":
        return cls(mass=tuple(float(m) for m in np.asarray(mass, dtype=float)), count=count)

    @classmethod
    def point_mass(cls, index: int, k: int) -> "GradeHistogram":
        mass = [0.0] * k
        mass[index] = 1.0
        return cls(mass=tuple(mass))


class UncertaintySpec(BaseModel):
    """An uncertainty function together with its binarization cut."""
    model_config = ConfigDict(frozen=True)

    kind: UncertaintyKind = Field(..., description="Which U(.) to apply.")
    threshold: float = Field(..., description="Scores strictly above are high uncertainty.")

    @field_validator("threshold")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value) or value < 0.0:
            raise ValueError("threshold must be finite and nonnegative")
        return value

    def upper_bound(self, scale: GradeScale) -> float:
        """Largest value the chosen U attains on this scale."""
        if self.kind is UncertaintyKind.DISAGREE:
            return 1.0 - 1.0 / scale.k
        if self.kind is UncertaintyKind.VARIANCE:
            return ((scale.grades[-1] - scale.grades[0]) / 2.0) ** 2
        return math.log(scale.k)

    def is_attainable(self, scale: GradeScale) -> bool:
        return self.threshold <= self.upper_bound(scale) + HISTOGRAM_TOLERANCE

    @classmethod
    def default(cls, kind: UncertaintyKind) -> "UncertaintySpec":
        return cls(kind=kind, threshold=DEFAULT_THRESHOLDS[kind])


class LabeledInstance(BaseModel):
    """One model input with its raw labels and derived uncertainty targets."""
    model_config = ConfigDict(frozen=True)

    features: Tuple[float, ...] = Field(..., description="Model input x.")
    group_id: str = Field(..., description="Split unit; never crosses train/test.")
    labels: Tuple[int, ...] = Field(..., description="Raw grade indices from the labelers.")
    histogram: GradeHistogram = Field(..., description="Empirical histogram of labels.")
    targets: Dict[UncertaintyKind, int] = Field(
        default_factory=dict, description="Binary target per uncertainty kind."
    )

    @model_validator(mode="after")
    def _check(self) -> "LabeledInstance":
        if not self.labels:
            raise ValueError("labels must be nonempty")
        if self.histogram.count != len(self.labels):
            raise ValueError("histogram count must equal the number of labels")
        counts = np.bincount(np.asarray(self.labels), minlength=self.histogram.k)
        if len(counts) != self.histogram.k:
            raise ValueError("label outside the histogram's grades")
        expected = counts / len(self.labels)
        if np.max(np.abs(expected - self.histogram.array())) > HISTOGRAM_TOLERANCE:
            raise ValueError("histogram does not match labels")
        if any(t not in (0, 1) for t in self.targets.values()):
            raise ValueError("targets must be binary")
        return self


class AdjudicatedInstance(BaseModel):
    """An instance with many individual labels and one consensus grade."""
    model_config = ConfigDict(frozen=True)

    features: Tuple[float, ...] = Field(..., description="Model input x.")
    group_id: str = Field("", description="Split unit identifier.")
    labels: Tuple[int, ...] = Field(..., description="Individual grade indices.")
    adjudicated: int = Field(..., description="Consensus grade index.")

    @field_validator("labels")
    @classmethod
    def _nonempty(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("labels must be nonempty")
        return value


class TrainConfig(BaseModel):
    """Optimizer and model-selection settings for one training run."""
    model_config = ConfigDict(frozen=True)

    mode: TrainMode = Field(..., description="dup or uvc.")
    learning_rate: float = Field(0.01, ge=0.0, description="SGD step size.")
    momentum: float = Field(0.9, ge=0.0, lt=1.0, description="Momentum coefficient.")
    batch_size: int = Field(32, gt=0, description="Minibatch size.")
    epochs: int = Field(100, ge=0, description="Passes over the training split.")
    seed: int = Field(0, description="Master seed for init, split and shuffling.")
    validation_fraction: float = Field(
        0.1, ge=0.0, lt=0.5, description="Fraction of groups held out for selection."
    )
    calibrate: bool = Field(False, description="Fit a temperature on the validation split.")
    uncertainty: UncertaintyKind = Field(
        UncertaintyKind.DISAGREE, description="Target kind for DUP training."
    )
    hidden: Tuple[int, ...] = Field((300, 300), description="Hidden layer widths.")
    aux_weight: float | None = Field(
        None, ge=0.0, description="Weight of the raw-score regression head (experimental)."
    )

    @field_validator("hidden")
    @classmethod
    def _positive(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(w < 1 for w in value):
            raise ValueError("hidden widths must be positive")
        return value


class BiasEntry(BaseModel):
    """Oracle values at one obscured observation x."""
    model_config = ConfigDict(frozen=True)

    x: XValue
    probability: float
    h_dup: float
    h_uvc: float


class BiasReport(BaseModel):
    """Exact DUP/UVC comparison on a discrete world."""
    model_config = ConfigDict(frozen=True)

    kind: UncertaintyKind = Field(..., description="disagree or variance.")
    empirical_bias: float = Field(..., description="E_x[h_uvc(x) - h_dup(x)].")
    formula_bias: float = Field(..., description="Closed-form bias from the posterior variances.")
    tower_gap: float = Field(..., description="|E_x h_dup - E_o U(posterior)|.")
    per_x: List[BiasEntry] = Field(default_factory=list)

    def violations(self) -> List[str]:
        """Names of the identities this report breaks; empty when all hold."""
        found: List[str] = []
        if self.empirical_bias < -BIAS_SIGN_TOLERANCE:
            found.append("sign")
        if any(e.h_uvc < e.h_dup - BIAS_SIGN_TOLERANCE for e in self.per_x):
            found.append("pointwise-sign")
        if abs(self.empirical_bias - self.formula_bias) > BIAS_FORMULA_TOLERANCE:
            found.append("corollary")
        if self.tower_gap > TOWER_TOLERANCE:
            found.append("tower")
        return found


class TransportPlan(BaseModel):
    """A coupling between two histograms and its transport cost."""
    model_config = ConfigDict(frozen=True)

    plan: Tuple[Tuple[float, ...], ...] = Field(..., description="pi(r, t) over source x target.")
    cost: float = Field(..., description="Value of the transport objective.")

    def array(self) -> np.ndarray:
        return np.asarray(self.plan, dtype=float)

    @field_validator("plan")
    @classmethod
    def _nonnegative(cls, value: Tuple[Tuple[float, ...], ...]) -> Tuple[Tuple[float, ...], ...]:
        if any(p < 0.0 for row in value for p in row):
            raise ValueError("transport plan entries must be nonnegative")
        return value

    def check_marginals(self, source: np.ndarray, target: np.ndarray) -> bool:
        plan = self.array()
        return bool(
            np.allclose(plan.sum(axis=1), source, atol=HISTOGRAM_TOLERANCE)
            and np.allclose(plan.sum(axis=0), target, atol=HISTOGRAM_TOLERANCE)
        )


class RankingReport(BaseModel):
    """Paired scores and targets with their ranking summaries."""
    model_config = ConfigDict(frozen=True)

    scores: Tuple[float, ...]
    targets: Tuple[float, ...]
    auc: float | None = Field(None, ge=0.0, le=1.0)
    spearman: float | None = Field(None, ge=-1.0, le=1.0)
    n: int

    @model_validator(mode="after")
    def _check(self) -> "RankingReport":
        if len(self.scores) != len(self.targets) or len(self.scores) != self.n:
            raise ValueError("scores and targets must have length n")
        return self

    def summary(self) -> Dict[str, float | int | None]:
        """The report without its paired arrays."""
        return self.model_dump(exclude={"scores", "targets"})
