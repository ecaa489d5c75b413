"""Algorithm descriptors and the experiment grid."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..errors import ConfigError


class Kind(str, enum.Enum):
    LR = "LR"
    DT = "DT"
    RF = "RF"
    SVM = "SVM"
    KNN = "KNN"
    MLP = "MLP"


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: Kind
    rf_trees: int | None = None
    knn_k: int | None = None
    mlp_layers: tuple[int, ...] | None = None
    learning_rate: float | None = None
    epochs: int | None = None
    l2: float | None = None
    tol: float = 1e-8
    batch_size: int = 32
    min_samples_split: int = 2
    # RF only; disabling both reduces a one-tree forest to a plain DT
    bootstrap: bool = True
    feature_subsample: bool = True

    def __post_init__(self):
        kind = Kind(self.kind) if not isinstance(self.kind, Kind) else self.kind
        object.__setattr__(self, "kind", kind)
        defaults = _DEFAULTS[kind]
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if kind is not Kind.RF and self.rf_trees is not None:
            raise ConfigError("rf_trees applies to RF only")
        if kind is not Kind.KNN and self.knn_k is not None:
            raise ConfigError("knn_k applies to KNN only")
        if kind is not Kind.MLP and self.mlp_layers is not None:
            raise ConfigError("mlp_layers applies to MLP only")
        if kind is Kind.RF and self.rf_trees < 1:
            raise ConfigError("rf_trees must be >= 1")
        if kind is Kind.KNN and self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if kind is Kind.MLP:
            layers = tuple(int(n) for n in self.mlp_layers)
            if not layers or min(layers) < 1:
                raise ConfigError("mlp_layers needs at least one positive layer size")
            object.__setattr__(self, "mlp_layers", layers)
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.l2 is not None and self.l2 < 0:
            raise ConfigError("l2 must be >= 0")
        if self.batch_size < 1 or self.min_samples_split < 2:
            raise ConfigError("batch_size must be >= 1 and min_samples_split >= 2")

    @property
    def name(self) -> str:
        """Row label as used in result tables, e.g. ``RF_10`` or ``MLP_10-10``."""
        if self.kind is Kind.RF:
            return f"RF_{self.rf_trees}"
        if self.kind is Kind.KNN:
            return f"kNN_{self.knn_k}"
        if self.kind is Kind.MLP:
            return "MLP_" + "-".join(str(n) for n in self.mlp_layers)
        return self.kind.value

    @property
    def token(self) -> str:
        """CLI form, e.g. ``rf:10`` or ``mlp:10,10``."""
        if self.kind is Kind.RF:
            return f"rf:{self.rf_trees}"
        if self.kind is Kind.KNN:
            return f"knn:{self.knn_k}"
        if self.kind is Kind.MLP:
            return "mlp:" + ",".join(str(n) for n in self.mlp_layers)
        return self.kind.value.lower()


_DEFAULTS = {
    Kind.LR: {"learning_rate": 0.1, "epochs": 5000, "l2": 1e-4},
    Kind.SVM: {"learning_rate": 0.1, "epochs": 5000, "l2": 1e-3},
    Kind.MLP: {"learning_rate": 0.01, "epochs": 500, "l2": 0.0},
    Kind.DT: {},
    Kind.RF: {},
    Kind.KNN: {},
}


def parse_algorithm(token: str) -> AlgorithmSpec:
    """``lr``, ``dt``, ``svm``, ``rf:N``, ``knn:K`` or ``mlp:A[,B...]``."""
    raw = token.strip().lower()
    name, _, arg = raw.partition(":")
    try:
        if name in ("lr", "dt", "svm") and not arg:
            return AlgorithmSpec(Kind(name.upper()))
        if name == "rf" and arg:
            return AlgorithmSpec(Kind.RF, rf_trees=int(arg))
        if name == "knn" and arg:
            return AlgorithmSpec(Kind.KNN, knn_k=int(arg))
        if name == "mlp" and arg:
            return AlgorithmSpec(Kind.MLP, mlp_layers=tuple(int(a) for a in arg.split(",")))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse algorithm {token!r}; expected lr|dt|svm|rf:N|knn:K|mlp:A[,B]")


SWEEP_GRID = tuple(
    parse_algorithm(t)
    for t in ("lr", "dt", "rf:5", "rf:10", "rf:25", "svm", "knn:5", "knn:1", "mlp:10", "mlp:10,10", "mlp:50")
)
