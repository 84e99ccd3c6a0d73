# label_uncertainty/datasets.py
"""
Dataset plumbing: seeded stream splitting, instance construction, group-wise
splits, array views and the CSV codec for labeled and adjudicated sets.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from label_uncertainty.errors import DatasetError, InvalidParameterError
from label_uncertainty.models import (
    DEFAULT_THRESHOLDS,
    AdjudicatedInstance,
    GradeScale,
    LabeledInstance,
    UncertaintyKind,
    UncertaintySpec,
)
from label_uncertainty.uncertainty import binarize, empirical_histogram, uncertainty

# logging
logger = logging.getLogger(__name__)

Seed = int | np.random.SeedSequence | np.random.Generator

FLOAT_FORMAT = "%.17g"
TARGET_COLUMNS = {
    UncertaintyKind.DISAGREE: "target_disagree",
    UncertaintyKind.VARIANCE: "target_var",
}


def make_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_seed_sequence(seed: Seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def spawn_seeds(seed: Seed, n: int) -> List[np.random.SeedSequence]:
    """Independent child streams derived from one master seed."""
    return as_seed_sequence(seed).spawn(n)


def target_specs(
    primary: UncertaintySpec,
    thresholds: Mapping[UncertaintyKind, float] = DEFAULT_THRESHOLDS,
) -> List[UncertaintySpec]:
    """The primary spec plus specs at `thresholds` for the other CSV-backed kinds."""
    specs = [primary]
    for kind in TARGET_COLUMNS:
        if kind is not primary.kind:
            specs.append(UncertaintySpec(kind=kind, threshold=thresholds[kind]))
    return specs


def build_instance(
    features: Iterable[float],
    group_id: str,
    labels: Sequence[int],
    scale: GradeScale,
    specs: Sequence[UncertaintySpec],
) -> LabeledInstance:
    """Histogram the labels and binarize each spec's uncertainty score."""
    histogram = empirical_histogram(labels, scale)
    targets = {s.kind: binarize(uncertainty(histogram, s.kind, scale), s) for s in specs}
    return LabeledInstance(
        features=tuple(float(f) for f in features),
        group_id=group_id,
        labels=tuple(int(label) for label in labels),
        histogram=histogram,
        targets=targets,
    )


# Array views

def feature_matrix(instances: Sequence[LabeledInstance | AdjudicatedInstance]) -> np.ndarray:
    if not instances:
        raise DatasetError("empty dataset")
    return np.asarray([inst.features for inst in instances], dtype=float)


def histogram_matrix(instances: Sequence[LabeledInstance]) -> np.ndarray:
    return np.asarray([inst.histogram.mass for inst in instances], dtype=float)


def target_vector(
    instances: Sequence[LabeledInstance],
    spec: UncertaintySpec | UncertaintyKind,
    scale: GradeScale | None = None,
) -> np.ndarray:
    """Binary targets for a kind; recomputed from the histograms when a
    full spec is given or the kind was not stored."""
    if isinstance(spec, UncertaintyKind):
        if all(spec in inst.targets for inst in instances):
            return np.asarray([inst.targets[spec] for inst in instances], dtype=int)
        spec = UncertaintySpec.default(spec)
    return np.asarray(
        [binarize(uncertainty(inst.histogram, spec.kind, scale), spec) for inst in instances],
        dtype=int,
    )


def raw_scores(
    instances: Sequence[LabeledInstance], kind: UncertaintyKind, scale: GradeScale | None = None
) -> np.ndarray:
    return np.asarray([uncertainty(inst.histogram, kind, scale) for inst in instances], dtype=float)


# Group-wise splitting

def group_split(
    group_ids: Sequence[str], fraction: float, seed: Seed
) -> Tuple[np.ndarray, np.ndarray]:
    """Indices (kept, held_out) with `fraction` of the distinct groups held out."""
    if not 0.0 <= fraction < 1.0:
        raise InvalidParameterError("split fraction must be in [0, 1)", data={"fraction": fraction})
    groups = list(dict.fromkeys(group_ids))
    n_held = int(round(fraction * len(groups)))
    if fraction > 0.0 and len(groups) > 1:
        n_held = min(max(n_held, 1), len(groups) - 1)
    order = make_rng(seed).permutation(len(groups))
    held = {groups[i] for i in order[:n_held]}
    mask = np.asarray([g in held for g in group_ids], dtype=bool)
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def split_instances(instances: Sequence, fraction: float, seed: Seed) -> Tuple[list, list]:
    kept, held = group_split([inst.group_id for inst in instances], fraction, seed)
    return [instances[i] for i in kept], [instances[i] for i in held]


# CSV codec

def _feature_columns(width: int) -> List[str]:
    return [f"f_{i}" for i in range(width)]


def _join_labels(labels: Sequence[int]) -> str:
    return ";".join(str(label) for label in labels)


def _split_labels(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in str(text).split(";") if part != "")


def _read_frame(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DatasetError("dataset file not found", data={"path": str(path)})
    try:
        frame = pd.read_csv(
            path,
            dtype={"group_id": str, "labels": str},
            keep_default_na=False,
            float_precision="round_trip",
        )
    except Exception as e:
        raise DatasetError(f"unreadable dataset: {e}", data={"path": str(path)})
    if "group_id" not in frame.columns or "labels" not in frame.columns:
        raise DatasetError("dataset is missing group_id/labels columns", data={"path": str(path)})
    return frame


def _features_of(frame: pd.DataFrame) -> np.ndarray:
    columns = [c for c in frame.columns if c.startswith("f_")]
    expected = _feature_columns(len(columns))
    if columns != expected:
        raise DatasetError("feature columns must be f_0..f_{D-1} in order")
    return frame[columns].to_numpy(dtype=float)


def write_dataset(path: str | Path, instances: Sequence[LabeledInstance]) -> Path:
    """Write instances as CSV with 17-significant-digit features."""
    features = feature_matrix(instances)
    frame = pd.DataFrame(features, columns=_feature_columns(features.shape[1]))
    frame.insert(0, "group_id", [inst.group_id for inst in instances])
    frame["labels"] = [_join_labels(inst.labels) for inst in instances]
    for kind, column in TARGET_COLUMNS.items():
        frame[column] = [str(inst.targets[kind]) if kind in inst.targets else "" for inst in instances]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("wrote %d instances to %s", len(instances), path)
    return path


def read_dataset(path: str | Path, scale: GradeScale) -> List[LabeledInstance]:
    """Inverse of `write_dataset`; histograms are rebuilt from the labels."""
    frame = _read_frame(path)
    features = _features_of(frame)
    instances: List[LabeledInstance] = []
    try:
        for row, x in zip(frame.itertuples(index=False), features):
            record = row._asdict()
            labels = _split_labels(record["labels"])
            targets = {
                kind: int(record[column])
                for kind, column in TARGET_COLUMNS.items()
                if column in record and str(record[column]) != ""
            }
            instances.append(
                LabeledInstance(
                    features=tuple(float(v) for v in x),
                    group_id=str(record["group_id"]),
                    labels=labels,
                    histogram=empirical_histogram(labels, scale),
                    targets=targets,
                )
            )
    except DatasetError:
        raise
    except Exception as e:
        raise DatasetError(f"malformed dataset row: {e}", data={"path": str(path)})
    return instances


def write_adjudicated(path: str | Path, instances: Sequence[AdjudicatedInstance]) -> Path:
    features = feature_matrix(instances)
    frame = pd.DataFrame(features, columns=_feature_columns(features.shape[1]))
    frame.insert(0, "group_id", [inst.group_id for inst in instances])
    frame["labels"] = [_join_labels(inst.labels) for inst in instances]
    frame["adjudicated"] = [inst.adjudicated for inst in instances]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_adjudicated(path: str | Path) -> List[AdjudicatedInstance]:
    frame = _read_frame(path)
    if "adjudicated" not in frame.columns:
        raise DatasetError("adjudicated column missing", data={"path": str(path)})
    features = _features_of(frame)
    try:
        return [
            AdjudicatedInstance(
                features=tuple(float(v) for v in x),
                group_id=str(gid),
                labels=_split_labels(labels),
                adjudicated=int(adj),
            )
            for gid, labels, adj, x in zip(
                frame["group_id"], frame["labels"], frame["adjudicated"], features
            )
        ]
    except Exception as e:
        raise DatasetError(f"malformed adjudicated row: {e}", data={"path": str(path)})
