"""Training, prediction, persistence and evaluation for every algorithm kind."""

from __future__ import annotations

import io
import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..errors import ConfigError, DataError, DegenerateLabels, TrainingError
from . import linear, mlp
from .dataset import Dataset
from .knn import knn_predict
from .spec import AlgorithmSpec, Kind
from .tree import build_forest, build_tree, forest_predict, tree_predict

MAGIC = b"GNIR"
FORMAT_VERSION = 1
TIMING_BATCH = 1000
TIMING_REPEATS = 5


@dataclass(frozen=True)
class TrainedModel:
    spec: AlgorithmSpec
    n_features: int
    params: dict  # name -> read-only ndarray
    meta: dict = field(default_factory=dict, compare=False)  # JSON-safe provenance, e.g. the split used

    def __post_init__(self):
        frozen = {}
        for k, v in self.params.items():
            a = np.array(v)
            a.setflags(write=False)
            frozen[k] = a
        object.__setattr__(self, "params", frozen)

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    def trees(self) -> list[dict]:
        n = int(self.params["n_trees"])
        fields = ("feature", "threshold", "left", "right", "value")
        return [{f: self.params[f"t{i}_{f}"] for f in fields} for i in range(n)]


def _tree_params(trees: list[dict]) -> dict:
    out = {"n_trees": np.array(len(trees))}
    for i, t in enumerate(trees):
        for k, v in t.items():
            out[f"t{i}_{k}"] = v
    return out


def train(spec: AlgorithmSpec, data: Dataset, seed: int = 0) -> TrainedModel:
    if len(data) == 0:
        raise DataError("empty training set", stage="train")
    X, y = data.X, data.y
    kind = spec.kind
    if kind in (Kind.LR, Kind.SVM, Kind.MLP) and len(np.unique(y)) < 2:
        raise DegenerateLabels(f"{spec.name} needs both classes in the training set", stage="train")
    try:
        if kind is Kind.LR:
            params = linear.fit_logistic(X, y, spec.learning_rate, spec.epochs, spec.l2, spec.tol)
        elif kind is Kind.SVM:
            params = linear.fit_svm(X, y, spec.learning_rate, spec.epochs, spec.l2)
        elif kind is Kind.MLP:
            params = mlp.fit_mlp(
                X, y, spec.mlp_layers, spec.learning_rate, spec.epochs, spec.batch_size, spec.l2, seed
            )
        elif kind is Kind.DT:
            params = _tree_params([build_tree(X, y, spec.min_samples_split)])
        elif kind is Kind.RF:
            trees = build_forest(
                X, y, spec.rf_trees, seed, spec.bootstrap, spec.feature_subsample, spec.min_samples_split
            )
            params = _tree_params(trees)
        elif kind is Kind.KNN:
            params = {"X": X.copy(), "y": y.copy()}
        else:  # pragma: no cover - Kind is closed
            raise ConfigError(f"unknown kind {kind}")
    except FloatingPointError as exc:
        raise TrainingError(f"{spec.name}: {exc}", stage="train") from None
    model = TrainedModel(spec, X.shape[1], params)
    if any(np.issubdtype(v.dtype, np.floating) and not np.all(np.isfinite(v)) for v in model.params.values()):
        raise TrainingError(f"{spec.name}: training diverged to non-finite parameters", stage="train")
    return model


def predict(model: TrainedModel, X) -> np.ndarray:
    """Labels (0 = STW, 1 = DTW) for a batch, in input order; a 1-D input is one row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"expected {model.n_features} features per row, got shape {X.shape}")
    kind, p = model.kind, model.params
    if kind in (Kind.LR, Kind.SVM):
        return (linear.linear_scores(p, X) > 0).astype(np.int64)
    if kind is Kind.MLP:
        return (mlp.mlp_scores(p, X) > 0).astype(np.int64)
    if kind is Kind.DT:
        return tree_predict(model.trees()[0], X)
    if kind is Kind.RF:
        return forest_predict(model.trees(), X)
    return knn_predict(p["X"], p["y"], X, model.spec.knn_k)


# --- persistence -------------------------------------------------------------

_SPEC_FIELDS = (
    "rf_trees", "knn_k", "mlp_layers", "learning_rate", "epochs", "l2", "tol", "batch_size",
    "min_samples_split", "bootstrap", "feature_subsample",
)


def to_bytes(model: TrainedModel) -> bytes:
    """``GNIR`` | u16 version | u8 kind length | kind | u32 header length | JSON header | npz blob."""
    kind = model.kind.value.encode()
    spec = {f: getattr(model.spec, f) for f in _SPEC_FIELDS}
    if spec["mlp_layers"] is not None:
        spec["mlp_layers"] = list(spec["mlp_layers"])
    header = json.dumps({"n_features": model.n_features, "spec": spec, "meta": model.meta}, sort_keys=True).encode()
    buf = io.BytesIO()
    np.savez(buf, **{k: model.params[k] for k in sorted(model.params)})
    head = MAGIC + struct.pack("<HB", FORMAT_VERSION, len(kind)) + kind + struct.pack("<I", len(header))
    return head + header + buf.getvalue()


def from_bytes(blob: bytes) -> TrainedModel:
    if blob[:4] != MAGIC:
        raise DataError("not a model file (bad magic bytes)")
    try:
        version, klen = struct.unpack_from("<HB", blob, 4)
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {version}")
        pos = 7
        kind = Kind(blob[pos : pos + klen].decode())
        pos += klen
        (hlen,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        header = json.loads(blob[pos : pos + hlen])
        pos += hlen
        with np.load(io.BytesIO(blob[pos:]), allow_pickle=False) as npz:
            params = {k: npz[k] for k in npz.files}
    except (struct.error, ValueError, KeyError, OSError) as exc:
        raise DataError(f"corrupt model file: {exc}") from None
    spec = header["spec"]
    if spec["mlp_layers"] is not None:
        spec["mlp_layers"] = tuple(spec["mlp_layers"])
    return TrainedModel(AlgorithmSpec(kind, **spec), int(header["n_features"]), params, header.get("meta", {}))


def save_model(path, model: TrainedModel) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file {path} not found")
    return from_bytes(path.read_bytes())


# --- evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    algorithm: str
    accuracy: float
    train_time_ms: float
    test_time_ms_per_1000: float

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "accuracy": self.accuracy,
            "train_time_ms": self.train_time_ms,
            "test_time_ms_per_1000": self.test_time_ms_per_1000,
        }


def accuracy(model: TrainedModel, data: Dataset) -> float:
    if len(data) == 0:
        raise DataError("empty test set")
    return float(np.mean(predict(model, data.X) == data.y))


def timing_batch(X: np.ndarray, size: int = TIMING_BATCH) -> np.ndarray:
    """``size`` rows, cycling through ``X``."""
    return X[np.arange(size) % len(X)]


def _median_ms(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times))


def evaluate(
    model: TrainedModel, test: Dataset, train_time_ms: float = 0.0, repeats: int = TIMING_REPEATS
) -> EvalReport:
    acc = accuracy(model, test)
    batch = timing_batch(test.X)
    with threadpool_limits(limits=1):
        test_ms = _median_ms(lambda: predict(model, batch), repeats)
    return EvalReport(model.spec.name, acc, train_time_ms, test_ms)


def train_timed(spec: AlgorithmSpec, data: Dataset, seed: int = 0, repeats: int = 1) -> tuple[TrainedModel, float]:
    """Train single-threaded; returns the model and the median wall time in ms."""
    out = {}

    def run():
        out["model"] = train(spec, data, seed)

    with threadpool_limits(limits=1):
        ms = _median_ms(run, repeats)
    return out["model"], ms


def train_and_evaluate(spec: AlgorithmSpec, train_set: Dataset, test_set: Dataset, seed: int = 0,
                       repeats: int = TIMING_REPEATS) -> tuple[TrainedModel, EvalReport]:
    model, train_ms = train_timed(spec, train_set, seed, repeats)
    return model, evaluate(model, test_set, train_ms, repeats)


# --- gradient verification ---------------------------------------------------

def _flatten(arrays) -> np.ndarray:
    return np.concatenate([np.ravel(a) for a in arrays])


def gradient_check(spec: AlgorithmSpec, X, y, seed: int = 0, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference loss gradients.

    Parameters are drawn at random (seeded); every parameter is perturbed.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    if spec.kind is Kind.LR:
        theta = rng.normal(0.0, 0.5, X.shape[1] + 1)

        def loss(t):
            return linear.lr_loss_grad(t[:-1], t[-1], X, y, spec.l2)[0]

        _, gw, gb = linear.lr_loss_grad(theta[:-1], theta[-1], X, y, spec.l2)
        analytic = np.append(gw, gb)
    elif spec.kind is Kind.MLP:
        layers = mlp.init_params([X.shape[1], *spec.mlp_layers, 1], rng)
        layers = [(W, rng.normal(0.0, 0.1, b.shape)) for W, b in layers]
        shapes = [a.shape for pair in layers for a in pair]
        theta = _flatten([a for pair in layers for a in pair])

        def unflatten(t):
            arrays, pos = [], 0
            for s in shapes:
                size = int(np.prod(s))
                arrays.append(t[pos : pos + size].reshape(s))
                pos += size
            return list(zip(arrays[0::2], arrays[1::2]))

        def loss(t):
            return mlp.loss_grad(unflatten(t), X, y, spec.l2)[0]

        _, grads = mlp.loss_grad(layers, X, y, spec.l2)
        analytic = _flatten([a for pair in grads for a in pair])
    else:
        raise ConfigError(f"gradient_check applies to LR and MLP, not {spec.kind.value}")
    numeric = np.empty_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = step
        numeric[i] = (loss(theta + e) - loss(theta - e)) / (2 * step)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
