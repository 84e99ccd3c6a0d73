# tests/test_training.py
"""
Tests for SGD training, model selection and temperature calibration.
"""
import numpy as np
import pytest

from label_uncertainty.datasets import build_instance, target_specs
from label_uncertainty.errors import AUCUndefinedError, DatasetError, InvalidParameterError
from label_uncertainty.mlp import Batch, dup_score, forward, init_model, loss
from label_uncertainty.models import GradeScale, TrainConfig, TrainMode, UncertaintyKind, UncertaintySpec
from label_uncertainty.oracle import exact_h_dup
from label_uncertainty.training import calibrate_temperature, make_batch, train, train_with_history

SCALE = GradeScale.uniform(2)
SPECS = target_specs(UncertaintySpec(kind=UncertaintyKind.DISAGREE, threshold=0.3))


@pytest.fixture
def separable_dataset():
    """Instances whose two labels split exactly when the first feature is positive."""
    rng = np.random.default_rng(0)
    sign = rng.choice([-1.0, 1.0], size=300)
    x = np.column_stack([sign * rng.uniform(0.2, 1.0, size=300), rng.uniform(-1.0, 1.0, size=300)])
    return [
        build_instance(x[i], f"s{i:04d}", [0, 1] if sign[i] > 0 else [0, 0], SCALE, SPECS)
        for i in range(300)
    ]


def dup_config(**overrides):
    settings = dict(
        mode=TrainMode.DUP,
        learning_rate=0.05,
        batch_size=16,
        epochs=40,
        hidden=(16,),
        validation_fraction=0.2,
        seed=3,
    )
    settings.update(overrides)
    return TrainConfig(**settings)


class TestMakeBatch:
    """Mode-specific targets."""

    def test_dup(self, separable_dataset):
        batch = make_batch(separable_dataset, dup_config(), SCALE)
        assert batch.targets.ndim == 1
        assert set(np.unique(batch.targets)) == {0, 1}

    def test_uvc(self, separable_dataset):
        batch = make_batch(separable_dataset, dup_config(mode=TrainMode.UVC), SCALE)
        assert batch.targets.shape == (300, 2)
        assert batch.targets.sum(axis=1) == pytest.approx(np.ones(300))

    def test_aux_targets(self, separable_dataset):
        batch = make_batch(separable_dataset, dup_config(mode=TrainMode.UVC, aux_weight=0.1), SCALE)
        assert set(np.round(batch.aux_targets, 12)) == {0.0, 0.5}


class TestTrain:
    """Minibatch SGD with momentum."""

    def test_separable(self, separable_dataset):
        model = train(separable_dataset, dup_config(), SCALE)
        batch = make_batch(separable_dataset, dup_config(), SCALE)
        predicted = (dup_score(model, batch.features) > 0.5).astype(int)
        assert np.mean(predicted == batch.targets) > 0.95

    def test_deterministic(self, separable_dataset):
        a = train(separable_dataset, dup_config(epochs=5), SCALE)
        b = train(separable_dataset, dup_config(epochs=5), SCALE)
        assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))

    def test_dup_converges_to_exact_score(self, world_w2):
        """Two observations with opposite point-mass posteriors share one
        feature vector: labels never disagree, so the trained score goes to
        the oracle value 0."""
        assert exact_h_dup(world_w2, "x", UncertaintyKind.DISAGREE) == pytest.approx(0.0, abs=1e-12)
        hidden_pair = [
            build_instance([1.0], f"w{i:03d}", [i % 2] * 5, SCALE, SPECS) for i in range(100)
        ]
        model = train(hidden_pair, dup_config(epochs=30, hidden=(8,)), SCALE)
        assert dup_score(model, np.array([1.0])) < 0.1

    def test_seed_matters(self, separable_dataset):
        a = train(separable_dataset, dup_config(epochs=1), SCALE)
        b = train(separable_dataset, dup_config(epochs=1, seed=4), SCALE)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_zero_learning_rate(self, separable_dataset):
        """lr = 0 leaves every parameter at its initial value."""
        model, history = train_with_history(separable_dataset, dup_config(learning_rate=0.0, epochs=3), SCALE)
        losses = {round(r.train_loss, 12) for r in history.records}
        assert len(losses) == 1
        assert history.best_epoch == 0

    def test_uvc(self, small_gaussian_dataset):
        config = TrainConfig(mode=TrainMode.UVC, epochs=3, hidden=(8,), learning_rate=0.05)
        model = train(small_gaussian_dataset, config, SCALE)
        assert model.output_dim == 2
        assert model.config == config

    def test_aux_head(self, small_gaussian_dataset):
        config = TrainConfig(mode=TrainMode.UVC, epochs=2, hidden=(8,), aux_weight=0.1)
        model = train(small_gaussian_dataset, config, SCALE)
        assert model.has_aux
        assert model.aux_loss_weight == 0.1

    def test_empty(self):
        with pytest.raises(DatasetError):
            train([], dup_config())


class TestHistory:
    """Per-epoch records and model selection."""

    def test_records(self, separable_dataset):
        _, history = train_with_history(separable_dataset, dup_config(epochs=4), SCALE)
        assert [r.epoch for r in history.records] == [0, 1, 2, 3, 4]
        assert history.train_size + history.validation_size == 300
        assert history.validation_size == 60
        assert list(history.to_frame().columns) == ["epoch", "train_loss", "validation_loss", "monitor_auc"]
        assert all(r.monitor_auc is None for r in history.records)

    def test_best_epoch_has_lowest_validation_loss(self, separable_dataset):
        _, history = train_with_history(separable_dataset, dup_config(epochs=10), SCALE)
        best = min(r.validation_loss for r in history.records)
        assert history.final.validation_loss == best

    def test_no_validation_split(self, separable_dataset):
        _, history = train_with_history(
            separable_dataset, dup_config(epochs=2, validation_fraction=0.0, calibrate=True), SCALE
        )
        assert history.validation_size == 0
        assert history.records[0].validation_loss is None
        assert history.temperature is not None

    def test_calibrated_run(self, separable_dataset):
        model, history = train_with_history(separable_dataset, dup_config(epochs=5, calibrate=True), SCALE)
        assert history.temperature == model.temperature

    @pytest.mark.parametrize("mode", list(TrainMode))
    def test_monitor_auc_per_epoch(self, separable_dataset, mode):
        monitor = separable_dataset[:100]
        _, history = train_with_history(
            separable_dataset, dup_config(mode=mode), SCALE, SPECS[0], monitor=monitor
        )
        epochs = [r.epoch for r in history.records]
        assert epochs == list(range(41))
        assert all(0.0 <= r.monitor_auc <= 1.0 for r in history.records)
        assert history.records[-1].monitor_auc > 0.9

    def test_monitor_needs_both_classes(self, separable_dataset):
        negatives = [inst for inst in separable_dataset if inst.targets[UncertaintyKind.DISAGREE] == 0]
        with pytest.raises(AUCUndefinedError):
            train_with_history(separable_dataset, dup_config(epochs=1), SCALE, monitor=negatives[:10])


class TestCalibrateTemperature:
    """One-parameter fit of T on held-out data."""

    @pytest.fixture
    def base(self, rng):
        model = init_model([2, 6, 3], TrainMode.UVC, seed=8)
        features = rng.normal(size=(50, 2))
        return model, features

    def test_fixed_point(self, base):
        """Targets equal to the model's own predictions leave T at 1."""
        model, features = base
        batch = Batch(features=features, targets=forward(model, features))
        assert calibrate_temperature(model, batch).temperature == pytest.approx(1.0, abs=1e-3)

    def test_doubled_logits(self, base):
        """Doubling the logits is undone by T = 2."""
        model, features = base
        params = model.parameters()
        params[-2], params[-1] = 2.0 * params[-2], 2.0 * params[-1]
        doubled = model.with_parameters(params)
        batch = Batch(features=features, targets=forward(model, features))
        assert calibrate_temperature(doubled, batch).temperature == pytest.approx(2.0, abs=1e-3)

    def test_never_worse(self, base, rng):
        model, features = base
        batch = Batch(features=features, targets=rng.dirichlet(np.ones(3), size=50))
        calibrated = calibrate_temperature(model, batch)
        assert loss(calibrated, batch, TrainMode.UVC) <= loss(model, batch, TrainMode.UVC) + 1e-12

    def test_only_temperature_changes(self, base, rng):
        model, features = base
        batch = Batch(features=features, targets=rng.dirichlet(np.ones(3), size=50))
        calibrated = calibrate_temperature(model, batch)
        assert all(np.array_equal(p, q) for p, q in zip(model.parameters(), calibrated.parameters()))

    def test_empty(self, base):
        model, _ = base
        with pytest.raises(InvalidParameterError):
            calibrate_temperature(model, [])
