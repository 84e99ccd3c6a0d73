# label_uncertainty/mlp.py
"""
Feed-forward softmax network with hand-written backpropagation.

The same network backs both scorers: in DUP mode it has two outputs
(low / high uncertainty), in UVC mode one output per grade. Predictions are
softmax(z / T) with a temperature T that only calibration changes.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import log_softmax, softmax

from label_uncertainty.datasets import Seed, make_rng
from label_uncertainty.errors import (
    DatasetError,
    ModeMismatchError,
    NonFiniteInputError,
    ShapeMismatchError,
)
from label_uncertainty.models import GradeScale, TrainConfig, TrainMode, UncertaintyKind
from label_uncertainty.uncertainty import uncertainty_scores

# logging
logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
LOG_CLIP = 1e-12
DUP_OUTPUTS = 2


class MlpModel(BaseModel):
    """Weights, biases and temperature of a rectifier network."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: TrainMode = Field(..., description="dup (2 outputs) or uvc (k outputs).")
    layer_dims: Tuple[int, ...] = Field(..., description="[D_in, hidden..., D_out].")
    weights: Tuple[np.ndarray, ...] = Field(..., description="One (fan_in, fan_out) matrix per layer.")
    biases: Tuple[np.ndarray, ...] = Field(..., description="One bias vector per layer.")
    temperature: float = Field(1.0, gt=0.0, description="Softmax temperature T.")
    aux_weights: np.ndarray | None = Field(None, description="Raw-score regression head weights.")
    aux_bias: float | None = Field(None, description="Raw-score regression head bias.")
    aux_loss_weight: float | None = Field(None, description="Weight of the regression term.")
    seed: int | None = Field(None, description="Seed the model was initialized from.")
    config: TrainConfig | None = Field(None, description="Training configuration, if trained.")

    @field_validator("weights", "biases", mode="before")
    @classmethod
    def _own_layers(cls, value: Sequence[Any]) -> Tuple[np.ndarray, ...]:
        # the model freezes its arrays, so it keeps private copies
        return tuple(np.array(a, dtype=float) for a in value)

    @field_validator("aux_weights", mode="before")
    @classmethod
    def _own_aux(cls, value: Any) -> np.ndarray | None:
        return None if value is None else np.array(value, dtype=float)

    @model_validator(mode="after")
    def _check(self) -> "MlpModel":
        dims = self.layer_dims
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs an input and an output width")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} has the wrong shape")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")
            w.flags.writeable = False
            b.flags.writeable = False
        if not math.isfinite(self.temperature):
            raise ValueError("temperature must be finite")
        if self.mode is TrainMode.DUP and dims[-1] != DUP_OUTPUTS:
            raise ValueError("DUP models have exactly two outputs")
        has_aux = self.aux_weights is not None
        if has_aux != (self.aux_bias is not None) or has_aux != (self.aux_loss_weight is not None):
            raise ValueError("aux head needs weights, bias and loss weight together")
        if has_aux:
            if self.aux_weights.shape != (dims[-2],):
                raise ValueError("aux head must read the last hidden layer")
            self.aux_weights.flags.writeable = False
        return self

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def has_aux(self) -> bool:
        return self.aux_weights is not None

    def with_temperature(self, temperature: float) -> "MlpModel":
        return self.model_copy(update={"temperature": float(temperature)})

    def parameters(self) -> List[np.ndarray]:
        """Copies of every trainable array, aux head last."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params += [np.array(w), np.array(b)]
        if self.has_aux:
            params += [np.array(self.aux_weights), np.array([self.aux_bias])]
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "MlpModel":
        layers = len(self.layer_dims) - 1
        update: Dict[str, Any] = {
            "weights": tuple(params[2 * i] for i in range(layers)),
            "biases": tuple(params[2 * i + 1] for i in range(layers)),
        }
        if self.has_aux:
            update["aux_weights"] = params[2 * layers]
            update["aux_bias"] = float(params[2 * layers + 1][0])
        return MlpModel.model_validate({**self._fields_dict(), **update})

    def _fields_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in type(self).model_fields}

    def logits(self, features: np.ndarray) -> np.ndarray:
        return _forward(self.weights, self.biases, _check_features(self, features))[1]

    # serialization

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": MODEL_FORMAT_VERSION,
            "mode": self.mode.value,
            "layer_dims": list(self.layer_dims),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "temperature": self.temperature,
            "aux": None if not self.has_aux else {
                "weights": self.aux_weights.tolist(),
                "bias": self.aux_bias,
                "loss_weight": self.aux_loss_weight,
            },
            "seed": self.seed,
            "config": None if self.config is None else self.config.model_dump(mode="json"),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpModel":
        if data.get("version") != MODEL_FORMAT_VERSION:
            raise DatasetError("unsupported model version", data={"version": data.get("version")})
        aux = data.get("aux")
        return cls(
            mode=TrainMode(data["mode"]),
            layer_dims=tuple(data["layer_dims"]),
            weights=tuple(np.asarray(w, dtype=float).reshape(a, b) for w, a, b in zip(
                data["weights"], data["layer_dims"][:-1], data["layer_dims"][1:])),
            biases=tuple(np.asarray(b, dtype=float) for b in data["biases"]),
            temperature=float(data["temperature"]),
            aux_weights=None if aux is None else np.asarray(aux["weights"], dtype=float),
            aux_bias=None if aux is None else float(aux["bias"]),
            aux_loss_weight=None if aux is None else float(aux["loss_weight"]),
            seed=data.get("seed"),
            config=None if data.get("config") is None else TrainConfig.model_validate(data["config"]),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict()), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DatasetError("model file not found", data={"path": str(path)})
        except ValueError as e:
            raise DatasetError(f"malformed model file: {e}", data={"path": str(path)})
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"malformed model file: {e}", data={"path": str(path)})


class Batch(BaseModel):
    """Features with mode-specific targets: binary labels or one-hot rows for
    DUP, soft histograms for UVC, and optional raw scores for the aux head."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    features: np.ndarray
    targets: np.ndarray
    aux_targets: np.ndarray | None = None

    @model_validator(mode="after")
    def _check(self) -> "Batch":
        if self.features.ndim != 2 or len(self.features) == 0:
            raise ValueError("batch features must be a nonempty (n, D) matrix")
        if len(self.targets) != len(self.features):
            raise ValueError("one target per row")
        if self.aux_targets is not None and len(self.aux_targets) != len(self.features):
            raise ValueError("one aux target per row")
        return self

    def take(self, index: np.ndarray) -> "Batch":
        return Batch(
            features=self.features[index],
            targets=self.targets[index],
            aux_targets=None if self.aux_targets is None else self.aux_targets[index],
        )

    def __len__(self) -> int:
        return len(self.features)


def init_model(
    layer_dims: Sequence[int],
    mode: TrainMode,
    seed: Seed = 0,
    aux_loss_weight: float | None = None,
) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = make_rng(seed)
    dims = tuple(int(d) for d in layer_dims)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    aux = {}
    if aux_loss_weight is not None:
        limit = math.sqrt(6.0 / (dims[-2] + 1))
        aux = {
            "aux_weights": rng.uniform(-limit, limit, size=dims[-2]),
            "aux_bias": 0.0,
            "aux_loss_weight": float(aux_loss_weight),
        }
    return MlpModel(
        mode=mode,
        layer_dims=dims,
        weights=tuple(weights),
        biases=tuple(biases),
        seed=seed if isinstance(seed, int) else None,
        **aux,
    )


def _check_features(model: MlpModel, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeMismatchError(
            "feature width does not match model input", data={"expected": model.input_dim}
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("features are not finite")
    return x


def _forward(
    weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], x: np.ndarray
) -> Tuple[List[np.ndarray], np.ndarray]:
    """Layer inputs (x, then each hidden activation) and the output logits."""
    activations = [x]
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        if i == last:
            return activations, z
        h = np.maximum(z, 0.0)
        activations.append(h)
    raise ValueError("network has no layers")


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """softmax(z / T) for one feature vector or each row of a matrix."""
    x = _check_features(model, features)
    _, logits = _forward(model.weights, model.biases, x)
    probs = softmax(logits / model.temperature, axis=1)
    return probs[0] if np.ndim(features) == 1 else probs


def _require_mode(model: MlpModel, mode: TrainMode) -> None:
    if model.mode is not TrainMode(mode):
        raise ModeMismatchError(
            f"model was trained in {model.mode.value} mode", data={"expected": TrainMode(mode).value}
        )


def soft_targets(model: MlpModel, targets: np.ndarray, mode: TrainMode) -> np.ndarray:
    """Targets as probability rows matching the model's outputs."""
    t = np.asarray(targets, dtype=float)
    if mode is TrainMode.DUP and t.ndim == 1:
        if not np.all((t == 0.0) | (t == 1.0)):
            raise ModeMismatchError("DUP targets must be binary")
        t = np.stack([1.0 - t, t], axis=1)
    if t.ndim != 2 or t.shape[1] != model.output_dim:
        raise ModeMismatchError(
            f"{mode.value} targets do not match {model.output_dim} outputs", data={"shape": list(t.shape)}
        )
    if np.any(t < 0.0) or not np.allclose(t.sum(axis=1), 1.0, atol=1e-9):
        raise ModeMismatchError("target rows must be probability vectors")
    return t


def loss_at(
    model: MlpModel,
    params: Sequence[np.ndarray],
    batch: Batch,
    targets: np.ndarray,
    need_grads: bool = True,
) -> Tuple[float, List[np.ndarray] | None]:
    layers = len(model.layer_dims) - 1
    weights = [params[2 * i] for i in range(layers)]
    biases = [params[2 * i + 1] for i in range(layers)]
    n = len(batch)
    activations, logits = _forward(weights, biases, batch.features)
    t = model.temperature
    log_probs = log_softmax(logits / t, axis=1)
    floor = math.log(LOG_CLIP)
    value = -float(np.sum(targets * np.maximum(log_probs, floor))) / n

    use_aux = model.has_aux and batch.aux_targets is not None
    if use_aux:
        aux_w, aux_b = params[2 * layers], params[2 * layers + 1]
        residual = activations[-1] @ aux_w + aux_b[0] - batch.aux_targets
        value += model.aux_loss_weight * float(np.mean(residual * residual))
    if not need_grads:
        return value, None

    grads: List[np.ndarray] = [np.zeros_like(p) for p in params]
    # clipped log-probabilities are constant, so they carry no gradient
    live = targets * (log_probs > floor)
    delta = (live.sum(axis=1, keepdims=True) * np.exp(log_probs) - live) / (t * n)
    grads[2 * (layers - 1)] = activations[-1].T @ delta
    grads[2 * (layers - 1) + 1] = delta.sum(axis=0)
    upstream = delta @ weights[-1].T
    if use_aux:
        d_aux = 2.0 * model.aux_loss_weight * residual / n
        grads[2 * layers] = activations[-1].T @ d_aux
        grads[2 * layers + 1] = np.array([d_aux.sum()])
        upstream = upstream + np.outer(d_aux, aux_w)
    for i in range(layers - 2, -1, -1):
        dz = upstream * (activations[i + 1] > 0.0)
        grads[2 * i] = activations[i].T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        if i > 0:
            upstream = dz @ weights[i].T
    return value, grads


def loss(model: MlpModel, batch: Batch, mode: TrainMode) -> float:
    """Mean cross-entropy against the batch targets (plus the aux term)."""
    mode = TrainMode(mode)
    _require_mode(model, mode)
    targets = soft_targets(model, batch.targets, mode)
    return loss_at(model, model.parameters(), batch, targets, need_grads=False)[0]


def loss_gradients(model: MlpModel, batch: Batch, mode: TrainMode) -> Tuple[float, List[np.ndarray]]:
    """Loss and its gradient with respect to `model.parameters()`."""
    mode = TrainMode(mode)
    _require_mode(model, mode)
    targets = soft_targets(model, batch.targets, mode)
    value, grads = loss_at(model, model.parameters(), batch, targets)
    return value, grads


def gradient_check(model: MlpModel, batch: Batch, mode: TrainMode, step: float = 1e-6) -> float:
    """Largest |analytic - numeric| / max(1, |analytic| + |numeric|) over
    every parameter, using central differences."""
    mode = TrainMode(mode)
    _require_mode(model, mode)
    targets = soft_targets(model, batch.targets, mode)
    params = model.parameters()
    _, analytic = loss_at(model, params, batch, targets)
    worst = 0.0
    for p, g in zip(params, analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + step
            upper = loss_at(model, params, batch, targets, need_grads=False)[0]
            flat[j] = original - step
            lower = loss_at(model, params, batch, targets, need_grads=False)[0]
            flat[j] = original
            numeric = (upper - lower) / (2.0 * step)
            error = abs(gflat[j] - numeric) / max(1.0, abs(gflat[j]) + abs(numeric))
            worst = max(worst, error)
    return worst


def _single_or_many(features: np.ndarray, values: np.ndarray) -> float | np.ndarray:
    return float(values[0]) if np.ndim(features) == 1 else values


def dup_score(model: MlpModel, features: np.ndarray) -> float | np.ndarray:
    """Predicted probability of the high-uncertainty class."""
    _require_mode(model, TrainMode.DUP)
    probs = np.atleast_2d(forward(model, features))
    return _single_or_many(features, probs[:, 1])


def uvc_score(
    model: MlpModel, features: np.ndarray, U: UncertaintyKind, scale: GradeScale | None = None
) -> float | np.ndarray:
    """U applied to the (calibrated) predicted grade distribution."""
    _require_mode(model, TrainMode.UVC)
    if scale is not None and scale.k != model.output_dim:
        raise ShapeMismatchError("grade scale does not match model outputs")
    probs = np.atleast_2d(forward(model, features))
    return _single_or_many(features, uncertainty_scores(probs, UncertaintyKind(U), scale))
