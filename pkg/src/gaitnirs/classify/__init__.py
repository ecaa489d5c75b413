from .dataset import Dataset, round_half_up, split_dataset
from .model import (
    EvalReport,
    TrainedModel,
    accuracy,
    evaluate,
    from_bytes,
    gradient_check,
    load_model,
    predict,
    save_model,
    to_bytes,
    train,
    train_and_evaluate,
    train_timed,
)
from .spec import SWEEP_GRID, AlgorithmSpec, Kind, parse_algorithm

__all__ = [
    "AlgorithmSpec",
    "Dataset",
    "EvalReport",
    "Kind",
    "SWEEP_GRID",
    "TrainedModel",
    "accuracy",
    "evaluate",
    "from_bytes",
    "gradient_check",
    "load_model",
    "parse_algorithm",
    "predict",
    "round_half_up",
    "save_model",
    "split_dataset",
    "to_bytes",
    "train",
    "train_and_evaluate",
    "train_timed",
]
