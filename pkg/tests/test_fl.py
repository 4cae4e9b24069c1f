from __future__ import annotations

import logging

import numpy as np
import pytest

from pqbfl.errors import ParameterError, TrainingError
from pqbfl.fl import (
    LabeledDataset,
    Model,
    cosine_distance,
    evaluate,
    fedavg,
    load_csv_dataset,
    loss_and_grad,
    make_global_dataset,
    shape_values,
    shard,
    train_local,
    wasserstein,
    zero_model,
)


def _toy(n_classes: int = 3, dim: int = 4, per_class: int = 15, seed: int = 5):
    return make_global_dataset(n_classes=n_classes, dim=dim, per_class=per_class, seed=seed)


def test_gradient_matches_central_finite_differences():
    data = _toy()
    rng = np.random.default_rng(0)
    model = Model(rng.normal(scale=0.3, size=3 * 4 + 3), 3, 4)
    _, grad = loss_and_grad(model, data)
    eps = 1e-6
    for k in range(len(model.weights)):
        bump = np.zeros_like(model.weights)
        bump[k] = eps
        up, _ = loss_and_grad(Model(model.weights + bump, 3, 4), data)
        down, _ = loss_and_grad(Model(model.weights - bump, 3, 4), data)
        numeric = (up - down) / (2 * eps)
        assert abs(numeric - grad[k]) < 1e-5


def test_centralized_training_converges():
    data = _toy(per_class=60)
    model, norm_loss = train_local(zero_model(3, 4), data, epochs=60, lr=0.5)
    assert evaluate(model, data) >= 0.95
    assert 0.0 <= norm_loss < 0.5


def test_zero_model_loss_normalizes_to_one():
    data = _toy()
    model, norm_loss = train_local(zero_model(3, 4), data, epochs=0, lr=0.5)
    # a uniform prediction sits at ln(n_classes), the normalization ceiling
    assert norm_loss == pytest.approx(1.0, abs=1e-12)
    assert norm_loss <= 1.0
    assert np.array_equal(model.weights, np.zeros(15))


def test_training_loss_decreases():
    data = _toy(per_class=40)
    _, after_one = train_local(zero_model(3, 4), data, epochs=1, lr=0.5)
    _, after_thirty = train_local(zero_model(3, 4), data, epochs=30, lr=0.5)
    assert after_thirty < after_one <= 1.0


def test_divergent_training_raises():
    # saturation keeps softmax losses finite for any reachable weights, so the
    # first non-finite value comes from overflowing the weights themselves
    data = _toy()
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingError):
            train_local(zero_model(3, 4), data, epochs=5, lr=1.7e308)


def test_training_argument_validation():
    data = _toy()
    with pytest.raises(ParameterError):
        train_local(zero_model(3, 4), data, epochs=-1, lr=0.5)
    empty = LabeledDataset(np.zeros((0, 4)), np.zeros(0, dtype=int), 3)
    with pytest.raises(ParameterError):
        train_local(zero_model(3, 4), empty, epochs=1, lr=0.5)
    with pytest.raises(ParameterError):
        evaluate(zero_model(3, 4), empty)


def test_shard_is_an_exact_partition():
    data = _toy(per_class=40)
    shards = shard(data, n_devices=5, skew=0.5, seed=3)
    assert sum(len(s) for s in shards) == len(data)
    combined = np.zeros(3)
    for s in shards:
        combined += np.bincount(s.labels, minlength=3)
    assert np.array_equal(combined, np.bincount(data.labels, minlength=3))


def test_shard_skew_controls_label_concentration():
    data = _toy(n_classes=4, per_class=50)
    global_hist = data.label_hist()

    def mean_distance(skew: float) -> float:
        shards = shard(data, n_devices=4, skew=skew, seed=9)
        return float(
            np.mean([wasserstein(s.label_hist(), global_hist) for s in shards if len(s)])
        )

    assert mean_distance(0.05) > mean_distance(50.0)


def test_shard_argument_validation():
    data = _toy()
    with pytest.raises(ParameterError):
        shard(data, 0, 0.5)
    with pytest.raises(ParameterError):
        shard(data, 2, 0.0)


def test_wasserstein_is_a_metric_on_histograms():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a, b, c = rng.dirichlet(np.ones(6), size=3)
        assert wasserstein(a, a) == pytest.approx(0.0, abs=1e-12)
        assert wasserstein(a, b) == pytest.approx(wasserstein(b, a))
        assert wasserstein(a, c) <= wasserstein(a, b) + wasserstein(b, c) + 1e-12


def test_wasserstein_endpoints_hit_the_upper_bound():
    left = np.array([1.0, 0.0, 0.0, 0.0])
    right = np.array([0.0, 0.0, 0.0, 1.0])
    assert wasserstein(left, right) == pytest.approx(1.0)
    assert wasserstein(left, left) == 0.0


def test_wasserstein_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        wasserstein(np.array([0.5, 0.6]), np.array([0.5, 0.5]))
    with pytest.raises(ParameterError):
        wasserstein(np.array([1.0]), np.array([1.0]))
    with pytest.raises(ParameterError):
        wasserstein(np.array([0.5, 0.5]), np.array([0.3, 0.3, 0.4]))


def test_cosine_distance_cases(caplog):
    assert cosine_distance(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(0.0)
    assert cosine_distance(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(1.0)
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.5)
    with caplog.at_level(logging.WARNING):
        assert cosine_distance(np.zeros(2), np.array([1.0, 0.0])) == 0.5
    assert "zero vector" in caplog.text
    with pytest.raises(ParameterError):
        cosine_distance(np.zeros(2), np.zeros(3))


def test_fedavg_is_a_sample_weighted_mean():
    a = Model(np.full(15, 1.0), 3, 4)
    b = Model(np.full(15, 5.0), 3, 4)
    merged = fedavg([a, b], [1, 3])
    assert np.allclose(merged.weights, 0.25 * 1.0 + 0.75 * 5.0)
    assert np.isfinite(merged.weights).all()


def test_fedavg_argument_validation():
    a = Model(np.zeros(15), 3, 4)
    with pytest.raises(ParameterError):
        fedavg([], [])
    with pytest.raises(ParameterError):
        fedavg([a], [0])
    with pytest.raises(ParameterError):
        fedavg([a, Model(np.zeros(10), 2, 4)], [1, 1])


def test_shape_values_mean_center():
    assert shape_values([0.9, 0.7]) == pytest.approx([0.1, -0.1])
    assert shape_values([0.5, 0.5, 0.5]) == [0.0, 0.0, 0.0]
    rng = np.random.default_rng(6)
    accs = rng.random(9).tolist()
    assert abs(sum(shape_values(accs))) < 1e-12
    with pytest.raises(ParameterError):
        shape_values([])


def test_dataset_validation_and_histogram():
    with pytest.raises(ParameterError):
        LabeledDataset(np.zeros((3, 2)), np.array([0, 1, 5]), 3)
    data = LabeledDataset(np.zeros((4, 2)), np.array([0, 0, 1, 2]), 3)
    hist = data.label_hist()
    assert hist.sum() == pytest.approx(1.0)
    assert np.allclose(hist, [0.5, 0.25, 0.25])


def test_model_shape_validation():
    with pytest.raises(ParameterError):
        Model(np.zeros(14), 3, 4)
    model = zero_model(3, 4)
    assert model.w_matrix.shape == (3, 4)
    assert model.bias.shape == (3,)


def test_csv_ingestion(tmp_path):
    rows = ["1.0,2.0,0", "0.5,0.25,1", "", "3.0,4.0,2"]
    path = tmp_path / "data.csv"
    path.write_text("\n".join(rows) + "\n")
    data = load_csv_dataset(str(path))
    assert len(data) == 3
    assert data.dim == 2
    assert data.n_classes == 3
    assert list(data.labels) == [0, 1, 2]

    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,0.5\n")  # fractional label column
    with pytest.raises(ParameterError):
        load_csv_dataset(str(bad))

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ParameterError):
        load_csv_dataset(str(empty))
