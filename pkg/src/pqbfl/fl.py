"""Federated learning substrate: data, local training, aggregation, factors.

The learning task is deliberately small and fully deterministic: Gaussian
class clusters, a linear softmax classifier trained by full-batch gradient
descent, and sample-count weighted averaging of device models.  Besides
training, this module computes the per-device behaviour factors consumed
by role selection: normalized loss, distribution distance of a device's
label histogram from the global one, model divergence from the global
model, and per-device contribution relative to the cohort mean.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ParameterError, TrainingError

logger = logging.getLogger(__name__)


@dataclass
class LabeledDataset:
    features: np.ndarray  # (N, dim) float64
    labels: np.ndarray  # (N,) int64
    n_classes: int

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ParameterError("features must be (N, dim) aligned with labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ParameterError("labels out of range for n_classes")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def label_hist(self) -> np.ndarray:
        """Normalized label histogram over the n_classes bins."""
        if len(self) == 0:
            raise ParameterError("empty dataset has no label histogram")
        counts = np.bincount(self.labels, minlength=self.n_classes).astype(np.float64)
        return counts / counts.sum()

    def subset(self, idx: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.n_classes)


@dataclass
class Model:
    """Linear classifier stored flat: n_classes * dim weights then biases."""

    weights: np.ndarray
    n_classes: int
    dim: int

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        expected = self.n_classes * self.dim + self.n_classes
        if self.weights.shape != (expected,):
            raise ParameterError(
                f"weights must be flat of length {expected}, got {self.weights.shape}"
            )

    @property
    def w_matrix(self) -> np.ndarray:
        return self.weights[: self.n_classes * self.dim].reshape(self.n_classes, self.dim)

    @property
    def bias(self) -> np.ndarray:
        return self.weights[self.n_classes * self.dim:]


def zero_model(n_classes: int, dim: int) -> Model:
    return Model(np.zeros(n_classes * dim + n_classes), n_classes, dim)


def make_global_dataset(
    n_classes: int = 10,
    dim: int = 16,
    per_class: int = 100,
    seed: int = 0,
    separation: float = 4.0,
    spread: float = 1.0,
) -> LabeledDataset:
    """Gaussian clusters, one per class, linearly separable at the defaults.

    Class means are random directions scaled to ``separation``; points
    scatter around them with standard deviation ``spread``.
    """
    if n_classes < 2 or dim < 1 or per_class < 1:
        raise ParameterError("need n_classes >= 2, dim >= 1, per_class >= 1")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(n_classes, dim))
    means *= separation / np.linalg.norm(means, axis=1, keepdims=True)
    features = np.concatenate(
        [means[c] + spread * rng.normal(size=(per_class, dim)) for c in range(n_classes)]
    )
    labels = np.repeat(np.arange(n_classes), per_class)
    order = rng.permutation(len(labels))
    return LabeledDataset(features[order], labels[order], n_classes)


def load_csv_dataset(path: str, n_classes: int | None = None) -> LabeledDataset:
    """Read a dataset from CSV: feature columns followed by an integer label."""
    rows: List[List[float]] = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            rows.append([float(v) for v in record])
    if not rows:
        raise ParameterError(f"no rows in dataset file {path}")
    data = np.asarray(rows)
    labels = data[:, -1].astype(np.int64)
    if np.any(data[:, -1] != labels):
        raise ParameterError("last column must hold integer labels")
    classes = n_classes if n_classes is not None else int(labels.max()) + 1
    return LabeledDataset(data[:, :-1], labels, classes)


def shard(
    dataset: LabeledDataset, n_devices: int, skew: float, seed: int = 0
) -> List[LabeledDataset]:
    """Split into n_devices label-skewed shards forming an exact partition.

    Each device draws class proportions from Dirichlet(skew); per class the
    samples are apportioned across devices by those weights with largest
    remainders, so every sample lands in exactly one shard.  Small ``skew``
    concentrates labels on few devices; large ``skew`` approaches the
    global distribution on every shard.
    """
    if n_devices < 1:
        raise ParameterError("need at least one device")
    if skew <= 0:
        raise ParameterError("skew must be positive")
    rng = np.random.default_rng(seed)
    proportions = rng.dirichlet([skew] * dataset.n_classes, size=n_devices)
    assignments: List[List[int]] = [[] for _ in range(n_devices)]
    for cls in range(dataset.n_classes):
        idx = np.flatnonzero(dataset.labels == cls)
        rng.shuffle(idx)
        weights = proportions[:, cls]
        total = weights.sum()
        if total <= 0:
            weights = np.full(n_devices, 1.0 / n_devices)
            total = 1.0
        quota = weights / total * len(idx)
        counts = np.floor(quota).astype(int)
        remainder = len(idx) - counts.sum()
        for dev in np.argsort(-(quota - counts))[:remainder]:
            counts[dev] += 1
        offset = 0
        for dev in range(n_devices):
            assignments[dev].extend(idx[offset: offset + counts[dev]])
            offset += counts[dev]
    return [
        dataset.subset(np.sort(np.asarray(ids, dtype=np.int64)))
        for ids in assignments
    ]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_grad(model: Model, data: LabeledDataset) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy and its flat gradient over the whole dataset."""
    if len(data) == 0:
        raise ParameterError("cannot evaluate loss on an empty dataset")
    probs = _softmax(data.features @ model.w_matrix.T + model.bias)
    n = len(data)
    picked = probs[np.arange(n), data.labels]
    loss = float(-np.mean(np.log(np.clip(picked, 1e-300, None))))
    delta = probs.copy()
    delta[np.arange(n), data.labels] -= 1.0
    grad_w = delta.T @ data.features / n
    grad_b = delta.mean(axis=0)
    return loss, np.concatenate([grad_w.ravel(), grad_b])


def train_local(
    model: Model, data: LabeledDataset, epochs: int, lr: float
) -> Tuple[Model, float]:
    """Full-batch gradient descent from ``model``; returns (model, norm loss).

    The returned loss is the final cross-entropy divided by the loss of a
    uniform prediction (ln n_classes), clipped to [0, 1], so it is
    comparable across devices and datasets.
    """
    if epochs < 0 or lr < 0:
        raise ParameterError("epochs and lr must be non-negative")
    if len(data) == 0:
        raise ParameterError("cannot train on an empty shard")
    weights = model.weights.copy()
    current = Model(weights, model.n_classes, model.dim)
    loss = None
    for _ in range(epochs):
        loss, grad = loss_and_grad(current, data)
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss}")
        weights = weights - lr * grad
        current = Model(weights, model.n_classes, model.dim)
    final_loss, _ = loss_and_grad(current, data)
    if not math.isfinite(final_loss):
        raise TrainingError(f"non-finite loss {final_loss}")
    normalized = min(1.0, final_loss / math.log(model.n_classes))
    return current, normalized


def evaluate(model: Model, data: LabeledDataset) -> float:
    """Top-1 accuracy of the argmax prediction."""
    if len(data) == 0:
        raise ParameterError("cannot evaluate on an empty dataset")
    logits = data.features @ model.w_matrix.T + model.bias
    return float(np.mean(logits.argmax(axis=1) == data.labels))


def fedavg(models: Sequence[Model], sample_counts: Sequence[int]) -> Model:
    """Sample-count weighted average of model weights."""
    if not models or len(models) != len(sample_counts):
        raise ParameterError("models and sample_counts must align and be non-empty")
    if any(c <= 0 for c in sample_counts):
        raise ParameterError("sample counts must be positive")
    first = models[0]
    for m in models[1:]:
        if m.weights.shape != first.weights.shape:
            raise ParameterError("model dimension mismatch in aggregation")
    total = float(sum(sample_counts))
    stacked = np.stack([m.weights for m in models])
    weights = np.asarray(sample_counts, dtype=np.float64) / total
    return Model(weights @ stacked, first.n_classes, first.dim)


def wasserstein(local_hist: np.ndarray, global_hist: np.ndarray) -> float:
    """Earth mover's distance between label histograms, scaled to [0, 1].

    Both inputs must be normalized distributions on the same bins; the raw
    distance (sum of absolute cumulative differences) is divided by the
    bin count minus one, its maximum on the shared support.
    """
    a = np.asarray(local_hist, dtype=np.float64)
    b = np.asarray(global_hist, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ParameterError("histograms must share a 1-d shape of >= 2 bins")
    for h in (a, b):
        if np.any(h < 0) or abs(h.sum() - 1.0) > 1e-9:
            raise ParameterError("histograms must be normalized distributions")
    return float(np.abs(np.cumsum(a - b)).sum() / (len(a) - 1))


def cosine_distance(w1: np.ndarray, w2: np.ndarray) -> float:
    """Angular divergence mapped to [0, 1]: (1 - cosine similarity) / 2.

    A zero vector has no direction; that case is flagged and scored as the
    midpoint 0.5 rather than raising inside a metrics pass.
    """
    a = np.asarray(w1, dtype=np.float64)
    b = np.asarray(w2, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError("vectors must share a shape")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        logger.warning("cosine distance against a zero vector; returning 0.5")
        return 0.5
    cos = float(np.dot(a, b) / (norm_a * norm_b))
    cos = max(-1.0, min(1.0, cos))
    return (1.0 - cos) / 2.0


def shape_values(accuracies: Sequence[float]) -> List[float]:
    """Per-device contribution: accuracy minus the cohort mean accuracy."""
    if not accuracies:
        raise ParameterError("need at least one accuracy")
    mean = sum(accuracies) / len(accuracies)
    return [a - mean for a in accuracies]
