# label_uncertainty/experiments.py
"""
DUP-versus-UVC experiments.

Each (seed, mode[, fraction]) cell trains and scores its own model with its
own streams, so cells run concurrently in worker threads; results are
collected by cell index and come back in submission order.
"""
from __future__ import annotations

import logging
from functools import partial
from typing import Callable, Dict, List, Sequence, Tuple, TypeVar

import anyio
import anyio.to_thread
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from label_uncertainty.datasets import feature_matrix, group_split, spawn_seeds, split_instances, target_vector
from label_uncertainty.errors import AUCUndefinedError, InvalidParameterError
from label_uncertainty.gaussian_world import GAUSSIAN_LABELS_PER_INSTANCE, gen_gaussian_dataset, sample_gaussian_world
from label_uncertainty.metrics import roc_auc
from label_uncertainty.mlp import MlpModel, dup_score, uvc_score
from label_uncertainty.models import (
    GAUSSIAN_THRESHOLDS,
    GradeScale,
    LabeledInstance,
    TrainConfig,
    TrainMode,
    UncertaintyKind,
    UncertaintySpec,
)
from label_uncertainty.training import train, train_with_history

# logging
logger = logging.getLogger(__name__)

T = TypeVar("T")


class EvalRow(BaseModel):
    """Test AUC of one model under one uncertainty kind."""
    model_config = ConfigDict(frozen=True)

    mode: TrainMode
    kind: UncertaintyKind = Field(..., description="Kind of the test targets.")
    trained_on: UncertaintyKind = Field(..., description="Kind the model was trained for.")
    seed: int
    auc: float


class ConvergenceRow(BaseModel):
    """Mean monitor AUC of each mode after one epoch."""
    model_config = ConfigDict(frozen=True)

    epoch: int
    dup_auc: float | None = None
    uvc_auc: float | None = None
    runs: int = Field(0, description="Seeds contributing to the means.")


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    fraction: float
    mode: TrainMode
    mean_auc: float
    std_auc: float
    runs: int


async def _gather(cells: Sequence[Callable[[], T]], workers: int) -> List[T]:
    limiter = anyio.CapacityLimiter(workers)
    results: List[T] = [None] * len(cells)  # type: ignore[list-item]

    async def run(index: int, cell: Callable[[], T]) -> None:
        results[index] = await anyio.to_thread.run_sync(cell, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, cell in enumerate(cells):
            tg.start_soon(run, index, cell)
    return results


def run_cells(cells: Sequence[Callable[[], T]], workers: int = 1) -> List[T]:
    """Synchronous wrapper running independent cells via anyio."""
    if workers < 1:
        raise InvalidParameterError("workers must be positive", data={"workers": workers})
    if not cells:
        return []
    return anyio.run(_gather, cells, workers)


def score_model(
    model: MlpModel,
    instances: Sequence[LabeledInstance],
    kind: UncertaintyKind,
    scale: GradeScale | None = None,
) -> np.ndarray:
    """DUP probability of high uncertainty, or U of the UVC grade distribution."""
    features = feature_matrix(instances)
    if model.mode is TrainMode.DUP:
        return np.asarray(dup_score(model, features))
    return np.asarray(uvc_score(model, features, kind, scale))


def targets_for(
    instances: Sequence[LabeledInstance],
    kind: UncertaintyKind,
    scale: GradeScale | None = None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None = None,
) -> np.ndarray:
    spec = (specs or {}).get(kind)
    return target_vector(instances, spec or kind, scale)


def evaluate_model(
    model: MlpModel,
    instances: Sequence[LabeledInstance],
    kinds: Sequence[UncertaintyKind],
    scale: GradeScale | None = None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None = None,
) -> Dict[UncertaintyKind, float]:
    """Test AUC for each kind. A DUP model keeps its own score and is judged
    against every kind's targets."""
    return {
        kind: roc_auc(score_model(model, instances, kind, scale), targets_for(instances, kind, scale, specs))
        for kind in kinds
    }


def _train_and_evaluate(
    train_set: Sequence[LabeledInstance],
    test_set: Sequence[LabeledInstance],
    config: TrainConfig,
    kinds: Sequence[UncertaintyKind],
    scale: GradeScale | None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None,
) -> Tuple[MlpModel, Dict[UncertaintyKind, float]]:
    spec = (specs or {}).get(config.uncertainty)
    model = train(train_set, config, scale, spec)
    return model, evaluate_model(model, test_set, kinds, scale, specs)


def compare_modes(
    train_set: Sequence[LabeledInstance],
    test_set: Sequence[LabeledInstance],
    config: TrainConfig,
    seeds: Sequence[int],
    kinds: Sequence[UncertaintyKind] | None = None,
    scale: GradeScale | None = None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None = None,
    workers: int = 1,
) -> Tuple[List[EvalRow], Dict[Tuple[TrainMode, int], MlpModel]]:
    """Train DUP and UVC once per seed and score both on the test set."""
    kinds = list(kinds or [config.uncertainty])
    keys = [(mode, seed) for seed in seeds for mode in TrainMode]
    cells = [
        partial(
            _train_and_evaluate, train_set, test_set,
            config.model_copy(update={"mode": mode, "seed": seed}), kinds, scale, specs,
        )
        for mode, seed in keys
    ]
    rows: List[EvalRow] = []
    models: Dict[Tuple[TrainMode, int], MlpModel] = {}
    for (mode, seed), (model, aucs) in zip(keys, run_cells(cells, workers)):
        models[(mode, seed)] = model
        for kind, auc in aucs.items():
            rows.append(EvalRow(mode=mode, kind=kind, trained_on=config.uncertainty, seed=seed, auc=auc))
    return rows, models


def comparison_table(rows: Sequence[EvalRow]) -> pd.DataFrame:
    """Mean and std of AUC in percent (one decimal) per (kind, mode), plus
    the DUP minus UVC gap."""
    frame = pd.DataFrame([r.model_dump(mode="json") for r in rows])
    summary = (
        frame.groupby(["kind", "mode"], sort=True)["auc"]
        .agg(mean_auc="mean", std_auc=lambda a: float(np.std(a)), runs="count")
        .reset_index()
    )
    summary["mean_auc"] = (100.0 * summary["mean_auc"]).round(1)
    summary["std_auc"] = (100.0 * summary["std_auc"]).round(1)
    means = summary.pivot(index="kind", columns="mode", values="mean_auc")
    if TrainMode.DUP.value in means and TrainMode.UVC.value in means:
        gap = (means[TrainMode.DUP.value] - means[TrainMode.UVC.value]).round(1)
        summary["dup_minus_uvc"] = summary["kind"].map(gap)
    return summary


def _sweep_cell(
    train_set: Sequence[LabeledInstance],
    test_set: Sequence[LabeledInstance],
    fraction: float,
    config: TrainConfig,
    scale: GradeScale | None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None,
) -> float | None:
    kept, _ = group_split([inst.group_id for inst in train_set], 1.0 - fraction, config.seed)
    subset = [train_set[i] for i in kept]
    targets = targets_for(subset, config.uncertainty, scale, specs)
    if targets.min() == targets.max():
        logger.warning("fraction %.2f seed %d has one target class; skipped", fraction, config.seed)
        return None
    _, aucs = _train_and_evaluate(subset, test_set, config, [config.uncertainty], scale, specs)
    return aucs[config.uncertainty]


def train_size_sweep(
    dataset: Sequence[LabeledInstance],
    fractions: Sequence[float],
    config: TrainConfig,
    seeds: Sequence[int],
    test_set: Sequence[LabeledInstance] | None = None,
    scale: GradeScale | None = None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None = None,
    test_fraction: float = 0.2,
    workers: int = 1,
) -> List[SweepRow]:
    """Test AUC of both modes trained on group subsamples of the training set.

    Without an explicit `test_set`, `test_fraction` of the groups of
    `dataset` are held out once (seeded by `config.seed`) and shared by all
    cells.
    """
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise InvalidParameterError("fractions must lie in (0, 1]", data={"fractions": list(fractions)})
    if test_set is None:
        kept, held = group_split([inst.group_id for inst in dataset], test_fraction, config.seed)
        train_set = [dataset[i] for i in kept]
        test_set = [dataset[i] for i in held]
    else:
        train_set = list(dataset)
    if not test_set:
        raise InvalidParameterError("sweep needs a nonempty test split")
    targets = targets_for(test_set, config.uncertainty, scale, specs)
    if targets.min() == targets.max():
        raise AUCUndefinedError("AUC undefined", data={"reason": "test split has one target class"})

    keys = [(f, mode, seed) for f in fractions for mode in TrainMode for seed in seeds]
    cells = [
        partial(
            _sweep_cell, train_set, test_set, f,
            config.model_copy(update={"mode": mode, "seed": seed}), scale, specs,
        )
        for f, mode, seed in keys
    ]
    results = run_cells(cells, workers)

    rows: List[SweepRow] = []
    for f in fractions:
        for mode in TrainMode:
            aucs = [auc for (kf, km, _), auc in zip(keys, results) if kf == f and km is mode and auc is not None]
            if not aucs:
                continue
            rows.append(SweepRow(
                fraction=f, mode=mode, mean_auc=float(np.mean(aucs)), std_auc=float(np.std(aucs)), runs=len(aucs),
            ))
    return rows


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json") for r in rows],
                        columns=["fraction", "mode", "mean_auc", "std_auc", "runs"])


def _redrawn_cell(
    d: int,
    m: int,
    seed: int,
    config: TrainConfig,
    n_instances: int,
    labels_per_instance: int,
    spec: UncertaintySpec,
    test_fraction: float,
) -> Dict[UncertaintyKind, float]:
    world_seed, data_seed, split_seed = spawn_seeds(seed, 3)
    world = sample_gaussian_world(d, m, world_seed)
    dataset = gen_gaussian_dataset(world, n_instances, labels_per_instance, spec, data_seed)
    train_set, test_set = split_instances(dataset, test_fraction, split_seed)
    specs = {kind: UncertaintySpec(kind=kind, threshold=t) for kind, t in GAUSSIAN_THRESHOLDS.items()}
    specs[spec.kind] = spec
    _, aucs = _train_and_evaluate(train_set, test_set, config, [spec.kind], world.scale, specs)
    return aucs


def gaussian_world_comparison(
    d: int,
    m: int,
    config: TrainConfig,
    seeds: Sequence[int],
    n_instances: int = 20_000,
    labels_per_instance: int = GAUSSIAN_LABELS_PER_INSTANCE,
    spec: UncertaintySpec | None = None,
    test_fraction: float = 0.2,
    workers: int = 1,
) -> List[EvalRow]:
    """DUP and UVC on a freshly drawn mixture world per seed.

    Each seed draws its own world, dataset and train/test split, so the
    spread of the rows covers world-to-world variation as well as
    initialization. Both modes of one seed share the same data.
    """
    spec = spec or UncertaintySpec(kind=config.uncertainty, threshold=GAUSSIAN_THRESHOLDS[config.uncertainty])
    keys = [(mode, seed) for seed in seeds for mode in TrainMode]
    cells = [
        partial(
            _redrawn_cell, d, m, seed,
            config.model_copy(update={"mode": mode, "seed": seed, "uncertainty": spec.kind}),
            n_instances, labels_per_instance, spec, test_fraction,
        )
        for mode, seed in keys
    ]
    rows = [
        EvalRow(mode=mode, kind=spec.kind, trained_on=spec.kind, seed=seed, auc=aucs[spec.kind])
        for (mode, seed), aucs in zip(keys, run_cells(cells, workers))
    ]
    logger.info("compared modes on %d redrawn (d=%d, m=%d) worlds", len(seeds), d, m)
    return rows


def _curve_cell(
    train_set: Sequence[LabeledInstance],
    test_set: Sequence[LabeledInstance],
    config: TrainConfig,
    scale: GradeScale | None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None,
) -> List[float | None]:
    spec = (specs or {}).get(config.uncertainty)
    _, history = train_with_history(train_set, config, scale, spec, monitor=test_set)
    return [record.monitor_auc for record in history.records]


def convergence_study(
    train_set: Sequence[LabeledInstance],
    test_set: Sequence[LabeledInstance],
    config: TrainConfig,
    seeds: Sequence[int],
    scale: GradeScale | None = None,
    specs: Dict[UncertaintyKind, UncertaintySpec] | None = None,
    workers: int = 1,
) -> List[ConvergenceRow]:
    """Test AUC of both modes after every epoch, averaged over seeds.

    Epoch 0 is the initialization. A run that diverges stops contributing
    from that epoch on.
    """
    if not test_set:
        raise InvalidParameterError("convergence study needs a nonempty test set")
    keys = [(mode, seed) for seed in seeds for mode in TrainMode]
    cells = [
        partial(_curve_cell, train_set, test_set, config.model_copy(update={"mode": mode, "seed": seed}), scale, specs)
        for mode, seed in keys
    ]
    curves = run_cells(cells, workers)
    by_epoch: Dict[Tuple[int, TrainMode], List[float]] = {}
    for (mode, _), curve in zip(keys, curves):
        for epoch, auc in enumerate(curve):
            if auc is not None:
                by_epoch.setdefault((epoch, mode), []).append(auc)

    rows: List[ConvergenceRow] = []
    for epoch in range(config.epochs + 1):
        dup = by_epoch.get((epoch, TrainMode.DUP), [])
        uvc = by_epoch.get((epoch, TrainMode.UVC), [])
        if not dup and not uvc:
            break
        rows.append(ConvergenceRow(
            epoch=epoch,
            dup_auc=float(np.mean(dup)) if dup else None,
            uvc_auc=float(np.mean(uvc)) if uvc else None,
            runs=min(len(dup), len(uvc)),
        ))
    return rows


def convergence_frame(rows: Sequence[ConvergenceRow]) -> pd.DataFrame:
    frame = pd.DataFrame([r.model_dump() for r in rows], columns=["epoch", "dup_auc", "uvc_auc", "runs"])
    frame = frame.astype({"dup_auc": float, "uvc_auc": float})
    frame["dup_minus_uvc"] = frame["dup_auc"] - frame["uvc_auc"]
    return frame
