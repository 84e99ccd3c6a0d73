# label_uncertainty/training.py
"""
Minibatch SGD with momentum for both training modes, with model selection
on a group-wise validation split and optional temperature calibration.
"""
from __future__ import annotations

import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize_scalar
from scipy.special import log_softmax

from label_uncertainty.datasets import (
    feature_matrix,
    histogram_matrix,
    make_rng,
    raw_scores,
    spawn_seeds,
    split_instances,
    target_vector,
)
from label_uncertainty.errors import DatasetError, InvalidParameterError
from label_uncertainty.metrics import roc_auc
from label_uncertainty.mlp import (
    LOG_CLIP,
    Batch,
    MlpModel,
    dup_score,
    init_model,
    loss_at,
    soft_targets,
    uvc_score,
)
from label_uncertainty.models import (
    GradeScale,
    LabeledInstance,
    TrainConfig,
    TrainMode,
    UncertaintySpec,
)

# logging
logger = logging.getLogger(__name__)

LOG_TEMPERATURE_BOUNDS = (-3.0, 3.0)
LOG_TEMPERATURE_TOLERANCE = 1e-5


class EpochRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int
    train_loss: float
    validation_loss: float | None = None
    monitor_auc: float | None = Field(None, description="AUC on the monitor set after this epoch.")


class TrainHistory(BaseModel):
    """Per-epoch losses (and monitor AUCs) of one run; epoch 0 is the initialization."""
    model_config = ConfigDict(frozen=True)

    records: List[EpochRecord] = Field(default_factory=list)
    best_epoch: int = Field(0, description="Epoch whose parameters were kept.")
    temperature: float | None = Field(None, description="Fitted T when calibrated.")
    train_size: int = 0
    validation_size: int = 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.records])

    @property
    def final(self) -> EpochRecord:
        return self.records[self.best_epoch]


def make_batch(
    instances: Sequence[LabeledInstance],
    config: TrainConfig,
    scale: GradeScale | None = None,
    spec: UncertaintySpec | None = None,
) -> Batch:
    """Features plus mode-specific targets for a list of instances.

    DUP targets are the stored binary targets of `config.uncertainty` (or
    recomputed under `spec`); UVC targets are the label histograms.
    """
    features = feature_matrix(instances)
    if config.mode is TrainMode.DUP:
        targets = target_vector(instances, spec or config.uncertainty, scale)
    else:
        targets = histogram_matrix(instances)
    aux = None
    if config.aux_weight is not None:
        aux = raw_scores(instances, config.uncertainty, scale)
    return Batch(features=features, targets=targets, aux_targets=aux)


def _output_dim(config: TrainConfig, dataset: Sequence[LabeledInstance], scale: GradeScale | None) -> int:
    if config.mode is TrainMode.DUP:
        return 2
    k = scale.k if scale is not None else dataset[0].histogram.k
    if any(inst.histogram.k != k for inst in dataset):
        raise DatasetError("instances disagree on the number of grades")
    return k


def _sgd_epoch(
    model: MlpModel,
    params: List[np.ndarray],
    velocity: List[np.ndarray],
    batch: Batch,
    targets: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
) -> None:
    order = rng.permutation(len(batch))
    for start in range(0, len(order), config.batch_size):
        index = order[start:start + config.batch_size]
        _, grads = loss_at(model, params, batch.take(index), targets[index])
        for p, v, g in zip(params, velocity, grads):
            v *= config.momentum
            v -= config.learning_rate * g
            p += v


def _monitor_auc(
    model: MlpModel,
    params: List[np.ndarray],
    features: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    scale: GradeScale | None,
) -> float:
    current = model.with_parameters(params)
    if config.mode is TrainMode.DUP:
        scores = dup_score(current, features)
    else:
        scores = uvc_score(current, features, config.uncertainty, scale)
    return roc_auc(scores, targets)


def train_with_history(
    dataset: Sequence[LabeledInstance],
    config: TrainConfig,
    scale: GradeScale | None = None,
    spec: UncertaintySpec | None = None,
    monitor: Sequence[LabeledInstance] | None = None,
) -> Tuple[MlpModel, TrainHistory]:
    """Train one model and return it with its loss history.

    With a `monitor` set, every record also carries the AUC of the current
    parameters on it against the `spec` (or `config.uncertainty`) targets.
    """
    if not dataset:
        raise DatasetError("empty dataset")
    monitor_features = monitor_targets = None
    if monitor:
        monitor_features = feature_matrix(monitor)
        monitor_targets = target_vector(monitor, spec or config.uncertainty, scale)
    split_seed, init_seed, shuffle_seed = spawn_seeds(config.seed, 3)
    train_set, validation = split_instances(dataset, config.validation_fraction, split_seed)
    train_batch = make_batch(train_set, config, scale, spec)
    val_batch = make_batch(validation, config, scale, spec) if validation else None

    if config.mode is TrainMode.DUP:
        positives = int(np.sum(train_batch.targets))
        if positives in (0, len(train_batch)):
            logger.warning("all DUP training targets are %d; training anyway", int(positives > 0))

    dims = (train_batch.features.shape[1], *config.hidden, _output_dim(config, dataset, scale))
    model = init_model(dims, config.mode, init_seed, aux_loss_weight=config.aux_weight)
    model = model.model_copy(update={"seed": config.seed, "config": config})

    params = model.parameters()
    velocity = [np.zeros_like(p) for p in params]
    train_targets = soft_targets(model, train_batch.targets, config.mode)
    val_targets = soft_targets(model, val_batch.targets, config.mode) if val_batch else None

    def evaluate(epoch: int) -> EpochRecord:
        train_loss = loss_at(model, params, train_batch, train_targets, need_grads=False)[0]
        val_loss = None
        if val_batch is not None:
            val_loss = loss_at(model, params, val_batch, val_targets, need_grads=False)[0]
        auc = None
        if monitor_features is not None and all(np.all(np.isfinite(p)) for p in params):
            auc = _monitor_auc(model, params, monitor_features, monitor_targets, config, scale)
        logger.debug("epoch %d: train %.6f validation %s auc %s", epoch, train_loss, val_loss, auc)
        return EpochRecord(epoch=epoch, train_loss=train_loss, validation_loss=val_loss, monitor_auc=auc)

    def selection_loss(record: EpochRecord) -> float:
        return record.train_loss if record.validation_loss is None else record.validation_loss

    records = [evaluate(0)]
    best_epoch, best_params = 0, [p.copy() for p in params]
    rng = make_rng(shuffle_seed)
    for epoch in range(1, config.epochs + 1):
        _sgd_epoch(model, params, velocity, train_batch, train_targets, config, rng)
        record = evaluate(epoch)
        records.append(record)
        if not all(np.all(np.isfinite(p)) for p in params):
            logger.warning("parameters diverged at epoch %d; stopping", epoch)
            break
        if selection_loss(record) < selection_loss(records[best_epoch]):
            best_epoch, best_params = epoch, [p.copy() for p in params]

    model = model.with_parameters(best_params)
    logger.info(
        "%s model: kept epoch %d of %d (loss %.6f)",
        config.mode.value, best_epoch, config.epochs, selection_loss(records[best_epoch]),
    )
    temperature = None
    if config.calibrate:
        if val_batch is None:
            logger.warning("no validation split; calibrating on the training split")
        model = calibrate_temperature(model, val_batch if val_batch is not None else train_batch)
        temperature = model.temperature

    history = TrainHistory(
        records=records,
        best_epoch=best_epoch,
        temperature=temperature,
        train_size=len(train_set),
        validation_size=len(validation),
    )
    return model, history


def train(
    dataset: Sequence[LabeledInstance],
    config: TrainConfig,
    scale: GradeScale | None = None,
    spec: UncertaintySpec | None = None,
) -> MlpModel:
    """Train a DUP or UVC model; see `train_with_history`."""
    return train_with_history(dataset, config, scale, spec)[0]


def calibrate_temperature(
    model: MlpModel,
    validation: Batch | Sequence[LabeledInstance],
    scale: GradeScale | None = None,
) -> MlpModel:
    """Fit T on held-out data, keeping every other parameter fixed."""
    if not isinstance(validation, Batch):
        if not validation:
            raise InvalidParameterError("empty validation set")
        config = model.config or TrainConfig(mode=model.mode)
        validation = make_batch(validation, config, scale)
    targets = soft_targets(model, validation.targets, model.mode)
    logits = model.logits(validation.features)
    floor = math.log(LOG_CLIP)

    def nll(log_t: float) -> float:
        log_probs = log_softmax(logits / math.exp(log_t), axis=1)
        return -float(np.sum(targets * np.maximum(log_probs, floor))) / len(logits)

    result = minimize_scalar(
        nll,
        bounds=LOG_TEMPERATURE_BOUNDS,
        method="bounded",
        options={"xatol": LOG_TEMPERATURE_TOLERANCE},
    )
    log_t = float(result.x)
    if not nll(log_t) < nll(0.0):
        log_t = 0.0
    logger.info("calibrated temperature T=%.6f (validation loss %.6f)", math.exp(log_t), nll(log_t))
    return model.with_temperature(math.exp(log_t))
