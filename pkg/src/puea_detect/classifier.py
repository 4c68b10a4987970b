"""Two-layer feed-forward network with sigmoid hidden and output layers.

Trained by mini-batch gradient descent with momentum on the summed per-class
binary cross-entropy of the sigmoid outputs against one-hot targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import storage
from .signal_synth import Hypothesis


@dataclass(frozen=True)
class NetworkShape:
    input_dim: int
    hidden_dim: int = 64
    output_dim: int = 3

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ValueError(f"all layer sizes must be >= 1: {self}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.01
    batch_size: int = 64
    momentum: float = 0.9
    heldout_fraction: float = 0.1
    seed: int = 0


@dataclass
class ClassifierModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    class_map: tuple = ()
    """Hypothesis of each output unit, in output order."""

    @property
    def shape(self) -> NetworkShape:
        return NetworkShape(self.w1.shape[1], self.w1.shape[0], self.w2.shape[0])

    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "ClassifierModel":
        return ClassifierModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(),
                               self.feature_mean.copy(), self.feature_std.copy(), tuple(self.class_map))

    def save(self, prefix, provenance: Optional[dict] = None) -> None:
        prefix = Path(prefix)
        blob = prefix.with_name(prefix.name + ".weights.bin")
        flat = np.concatenate([p.ravel() for p in self.params().values()])
        try:
            blob.write_bytes(np.ascontiguousarray(flat, dtype="<f8").tobytes())
        except OSError as exc:
            raise storage.StorageError(f"{blob}: {exc}") from exc
        shape = self.shape
        meta = {
            "shape": {"input_dim": shape.input_dim, "hidden_dim": shape.hidden_dim, "output_dim": shape.output_dim},
            "class_map": [Hypothesis(c).name for c in self.class_map],
            "feature_stats": {"mean": self.feature_mean.tolist(), "std": self.feature_std.tolist()},
            "weights_file": blob.name,
            "weights_layout": ["w1", "b1", "w2", "b2"],
            "provenance": dict(provenance or {}),
        }
        path = prefix.with_name(prefix.name + ".json")
        try:
            path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise storage.StorageError(f"{path}: {exc}") from exc

    @classmethod
    def load(cls, prefix) -> "ClassifierModel":
        prefix = Path(prefix)
        path = prefix.with_name(prefix.name + ".json")
        try:
            meta = json.loads(path.read_text())
            flat = np.frombuffer((path.parent / meta["weights_file"]).read_bytes(), dtype="<f8").astype(float)
        except OSError as exc:
            raise storage.StorageError(f"{path}: {exc}") from exc
        k, l, m = (meta["shape"][key] for key in ("input_dim", "hidden_dim", "output_dim"))
        sizes = [l * k, l, m * l, m]
        if flat.size != sum(sizes):
            raise storage.StorageError(f"{path}: weight blob has {flat.size} values, expected {sum(sizes)}")
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return cls(parts[0].reshape(l, k), parts[1], parts[2].reshape(m, l), parts[3],
                   np.array(meta["feature_stats"]["mean"], dtype=float),
                   np.array(meta["feature_stats"]["std"], dtype=float),
                   tuple(Hypothesis[name] for name in meta["class_map"]))


@dataclass
class TrainReport:
    train_loss: np.ndarray
    heldout_loss: np.ndarray
    epochs: int
    train_accuracy: float = float("nan")
    heldout_accuracy: float = float("nan")

    def to_csv(self, path, provenance: Optional[dict] = None) -> None:
        rows = [(e + 1, float(a), float(b)) for e, (a, b) in enumerate(zip(self.train_loss, self.heldout_loss))]
        storage.write_csv(path, ["epoch", "train_loss", "heldout_loss"], rows, provenance)


def sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def init_model(shape: NetworkShape, seed, class_map: Optional[Sequence] = None) -> ClassifierModel:
    """Weights uniform in ``+-1/sqrt(fan_in)``, zero biases, identity feature scaling."""
    rng = np.random.default_rng(seed)
    k, l, m = shape.input_dim, shape.hidden_dim, shape.output_dim
    w1 = rng.uniform(-1, 1, size=(l, k)) / np.sqrt(k)
    w2 = rng.uniform(-1, 1, size=(m, l)) / np.sqrt(l)
    if class_map is None:
        class_map = tuple(Hypothesis(i) for i in range(m)) if m <= len(Hypothesis) else tuple(range(m))
    return ClassifierModel(w1, np.zeros(l), w2, np.zeros(m), np.zeros(k), np.ones(k), tuple(class_map))


def fit_feature_stats(model: ClassifierModel, features) -> ClassifierModel:
    """Set the model's per-feature standardization from ``features`` (rows = samples)."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    std = x.std(axis=0)
    std[std == 0] = 1.0
    model.feature_mean = x.mean(axis=0)
    model.feature_std = std
    return model


def _normalize(model: ClassifierModel, x: np.ndarray) -> np.ndarray:
    return (x - model.feature_mean) / model.feature_std


def _check_features(model: ClassifierModel, features) -> tuple[np.ndarray, bool]:
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.w1.shape[1]:
        raise ValueError(f"feature length {x.shape[1]} does not match model input_dim {model.w1.shape[1]}")
    return x, single


def forward(model: ClassifierModel, features) -> np.ndarray:
    """Sigmoid scores in (0, 1), one per class; accepts one vector or a batch of rows."""
    x, single = _check_features(model, features)
    h = sigmoid(_normalize(model, x) @ model.w1.T + model.b1)
    s = sigmoid(h @ model.w2.T + model.b2)
    return s[0] if single else s


def decide(scores) -> np.ndarray:
    """Index of the highest score per row; the lowest index wins ties."""
    return np.argmax(np.atleast_2d(scores), axis=1)


def predict(model: ClassifierModel, features):
    scores = forward(model, features)
    idx = decide(scores)
    labels = [model.class_map[i] for i in idx]
    if np.ndim(scores) == 1:
        return labels[0], scores
    return labels, scores


def loss_and_grads(params: dict, xn: np.ndarray, targets: np.ndarray) -> tuple[float, dict]:
    """Mean over samples of the summed per-class cross-entropy, and its gradients.

    ``xn`` must already be standardized; ``targets`` is one-hot ``(n, m)``.
    """
    n = xn.shape[0]
    a1 = xn @ params["w1"].T + params["b1"]
    h = sigmoid(a1)
    a2 = h @ params["w2"].T + params["b2"]
    # -[t log s + (1-t) log(1-s)] with s = sigmoid(a) equals softplus(a) - t a
    loss = float(np.sum(np.logaddexp(0.0, a2) - targets * a2) / n)
    d2 = (sigmoid(a2) - targets) / n
    d1 = (d2 @ params["w2"]) * h * (1.0 - h)
    grads = {"w1": d1.T @ xn, "b1": d1.sum(axis=0), "w2": d2.T @ h, "b2": d2.sum(axis=0)}
    return loss, grads


def _dataset_arrays(dataset, labels=None):
    if labels is None:
        items = list(dataset)
        if not items:
            raise ValueError("empty dataset")
        x = np.stack([np.asarray(fv.values, dtype=float) for fv in items])
        y = [Hypothesis.parse(fv.label) for fv in items]
    else:
        x = np.atleast_2d(np.asarray(dataset, dtype=float))
        y = [Hypothesis.parse(v) for v in labels]
        if x.shape[0] != len(y):
            raise ValueError("features and labels differ in length")
    if x.shape[0] == 0:
        raise ValueError("empty dataset")
    return x, np.array([int(v) for v in y])


def _stratified_split(y: np.ndarray, fraction: float, rng: np.random.Generator):
    held = []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        n_hold = int(np.floor(fraction * idx.size))
        if n_hold:
            held.extend(rng.permutation(idx)[:n_hold])
    mask = np.zeros(y.size, dtype=bool)
    mask[np.array(held, dtype=int)] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def train(dataset, shape: NetworkShape, hyper: TrainConfig = TrainConfig(), labels=None,
          class_map: Optional[Sequence] = None) -> tuple[ClassifierModel, TrainReport]:
    """Fit a classifier to ``dataset``.

    ``dataset`` is a sequence of :class:`FeatureVector` (or any object with
    ``values`` and ``label``), or a feature matrix with ``labels`` given
    separately. ``class_map`` fixes the output order; by default it is the
    sorted set of labels present. A stratified ``hyper.heldout_fraction`` of
    the data is kept aside for the held-out loss curve.
    """
    x, y = _dataset_arrays(dataset, labels)
    if class_map is None:
        class_map = tuple(Hypothesis(int(c)) for c in np.unique(y))
    else:
        class_map = tuple(Hypothesis.parse(c) for c in class_map)
    counts = {c: int(np.sum(y == int(c))) for c in class_map}
    empty = [c.name for c, n in counts.items() if n == 0]
    if empty:
        raise ValueError(f"no training samples for class(es): {', '.join(empty)}")
    if len(class_map) != shape.output_dim:
        raise ValueError(f"output_dim {shape.output_dim} does not match {len(class_map)} classes")
    if x.shape[1] != shape.input_dim:
        raise ValueError(f"feature length {x.shape[1]} does not match input_dim {shape.input_dim}")
    unknown = set(np.unique(y)) - {int(c) for c in class_map}
    if unknown:
        raise ValueError(f"labels outside class_map: {sorted(unknown)}")

    init_ss, split_ss, shuffle_ss = np.random.SeedSequence(hyper.seed).spawn(3)
    tr_idx, ho_idx = _stratified_split(y, hyper.heldout_fraction, np.random.default_rng(split_ss))
    index_of = {int(c): i for i, c in enumerate(class_map)}
    onehot = np.zeros((y.size, len(class_map)))
    onehot[np.arange(y.size), [index_of[int(v)] for v in y]] = 1.0

    model = init_model(shape, init_ss, class_map)
    fit_feature_stats(model, x[tr_idx])
    xn = _normalize(model, x)
    x_tr, t_tr = xn[tr_idx], onehot[tr_idx]
    x_ho, t_ho = xn[ho_idx], onehot[ho_idx]

    params = model.params()
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    rng = np.random.default_rng(shuffle_ss)
    train_curve = np.zeros(hyper.epochs)
    held_curve = np.full(hyper.epochs, np.nan)
    n = tr_idx.size
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start:start + hyper.batch_size]
            _, grads = loss_and_grads(params, x_tr[batch], t_tr[batch])
            for key in params:
                velocity[key] *= hyper.momentum
                velocity[key] -= hyper.learning_rate * grads[key]
                params[key] += velocity[key]
        train_curve[epoch] = loss_and_grads(params, x_tr, t_tr)[0]
        if ho_idx.size:
            held_curve[epoch] = loss_and_grads(params, x_ho, t_ho)[0]

    def accuracy(xs, ts):
        if xs.shape[0] == 0:
            return float("nan")
        scores = forward(ClassifierModel(params["w1"], params["b1"], params["w2"], params["b2"],
                                         np.zeros(xs.shape[1]), np.ones(xs.shape[1])), xs)
        return float(np.mean(decide(scores) == np.argmax(ts, axis=1)))

    report = TrainReport(train_curve, held_curve, hyper.epochs, accuracy(x_tr, t_tr), accuracy(x_ho, t_ho))
    return model, report
