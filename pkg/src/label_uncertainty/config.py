# label_uncertainty/config.py
"""
Experiment configuration.

A flat `[experiment]` INI section supplies values, command-line flags
override them, and `ExperimentConfig` validates the result:

    [experiment]
    world = gaussian
    dim = 3
    components = 5
    uncertainty = disagree
    threshold = 0.5
    hidden = 300, 300
"""
from __future__ import annotations

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from label_uncertainty.blur_world import BLUR_SPECS, BlurWorld
from label_uncertainty.errors import InvalidParameterError
from label_uncertainty.models import (
    GAUSSIAN_THRESHOLDS,
    GradeScale,
    TrainConfig,
    TrainMode,
    UncertaintyKind,
    UncertaintySpec,
)
from label_uncertainty.uncertainty import check_spec

# logging
logger = logging.getLogger(__name__)

SECTION = "experiment"
GAUSSIAN_EPOCHS = 100
BLUR_EPOCHS = 50
GAUSSIAN_INSTANCES = 20_000
BLUR_INSTANCES = 5000


class ExperimentConfig(BaseModel):
    """Everything a command needs to replay a run."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    world: Literal["gaussian", "blur"] = Field("gaussian", description="Data-generating world.")
    dim: int = Field(3, ge=1, description="Gaussian observation dimension d.")
    components: int = Field(5, ge=2, description="Gaussian mixture components m (= grades).")
    n_instances: int | None = Field(
        None, ge=1, description="Instances (or images) generated; None picks 20000 (gaussian) or 5000 (blur)."
    )
    labels_per_instance: int = Field(5, ge=1, description="Labels drawn per Gaussian instance.")
    adjudicated_instances: int = Field(1000, ge=0, description="Size of the adjudicated set.")
    adjudicated_labels: int = Field(20, ge=1, description="Labels per adjudicated instance.")
    uncertainty: UncertaintyKind = Field(UncertaintyKind.DISAGREE, description="Target U.")
    threshold: float | None = Field(None, ge=0.0, description="Binarization cut; None picks the world default.")
    mode: TrainMode = Field(TrainMode.DUP, description="Training mode for `train`.")
    learning_rate: float = Field(0.01, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    batch_size: int = Field(32, gt=0)
    epochs: int | None = Field(None, ge=0, description="None picks 100 (gaussian) or 50 (blur).")
    hidden: Tuple[int, ...] = Field((300, 300))
    validation_fraction: float = Field(0.1, ge=0.0, lt=0.5)
    calibrate: bool = False
    aux_weight: float | None = Field(None, ge=0.0)
    out: Path = Field(Path("runs"), description="Output directory.")
    seed: int = Field(0, description="Master seed.")
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0, description="Fraction of groups in test.csv.")
    image_size: int = Field(12, ge=5, description="Blur glyph side length.")
    workers: int = Field(1, ge=1, description="Concurrent experiment cells.")
    repeats: int = Field(3, ge=1, description="Seeds per mode for eval and sweep.")
    fractions: Tuple[float, ...] = Field((0.3, 0.5, 0.7, 1.0), description="Train-size sweep fractions.")
    doctor_counts: Tuple[int, ...] = Field((1, 3, 5, 10), description="Subsample sizes for rank.")

    @field_validator("hidden", "fractions", "doctor_counts", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ValueError("fractions must lie in (0, 1]")
        if any(n < 1 for n in self.doctor_counts):
            raise ValueError("doctor_counts must be positive")
        check_spec(self.spec(), self.scale)
        return self

    @property
    def scale(self) -> GradeScale:
        if self.world == "blur":
            return BlurWorld().scale
        return GradeScale.uniform(self.components)

    @property
    def effective_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return BLUR_EPOCHS if self.world == "blur" else GAUSSIAN_EPOCHS

    @property
    def effective_instances(self) -> int:
        if self.n_instances is not None:
            return self.n_instances
        return BLUR_INSTANCES if self.world == "blur" else GAUSSIAN_INSTANCES

    def spec_for(self, kind: UncertaintyKind) -> UncertaintySpec:
        """Binarization spec of `kind` under this world's conventions."""
        if kind is self.uncertainty and self.threshold is not None:
            return UncertaintySpec(kind=kind, threshold=self.threshold)
        if self.world == "blur":
            for spec in BLUR_SPECS:
                if spec.kind is kind:
                    return spec
            return UncertaintySpec(kind=kind, threshold=0.0)
        return UncertaintySpec(kind=kind, threshold=GAUSSIAN_THRESHOLDS[kind])

    def spec(self) -> UncertaintySpec:
        return self.spec_for(self.uncertainty)

    def specs(self) -> Dict[UncertaintyKind, UncertaintySpec]:
        return {kind: self.spec_for(kind) for kind in UncertaintyKind}

    def train_config(self, mode: TrainMode | None = None, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            mode=mode or self.mode,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            epochs=self.effective_epochs,
            seed=self.seed if seed is None else seed,
            validation_fraction=self.validation_fraction,
            calibrate=self.calibrate,
            uncertainty=self.uncertainty,
            hidden=self.hidden,
            aux_weight=self.aux_weight,
        )

    def seeds(self) -> Tuple[int, ...]:
        return tuple(range(self.seed, self.seed + self.repeats))


def read_ini(path: str | Path) -> Dict[str, str]:
    """Key/value pairs of the `[experiment]` section."""
    path = Path(path)
    if not path.is_file():
        raise InvalidParameterError("config file not found", data={"path": str(path)})
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise InvalidParameterError(f"malformed config file: {e}", data={"path": str(path)})
    if not parser.has_section(SECTION):
        raise InvalidParameterError(f"config file has no [{SECTION}] section", data={"path": str(path)})
    return dict(parser.items(SECTION))


def load_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> ExperimentConfig:
    """File values, then non-None overrides, validated together."""
    values: Dict[str, Any] = read_ini(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    for key in ("threshold", "epochs", "aux_weight"):
        if values.get(key) in ("", "none", "None"):
            values[key] = None
    try:
        config = ExperimentConfig.model_validate(values)
    except ValidationError as e:
        errors = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise InvalidParameterError("invalid configuration", data={"errors": errors})
    logger.debug("configuration: %s", config.model_dump(mode="json"))
    return config
