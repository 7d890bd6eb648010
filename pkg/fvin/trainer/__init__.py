from .baseline import BaselineDiagnostics, BlackBoxModel, train_blackbox_baseline
from .dataset import DatasetManifest, read_dataset, write_dataset
from .loop import TrainResult, make_loss_fn, train, write_loss_history
from .losses import LOSSES, attitude_error, loss_for, loss_Ia, loss_Ib, loss_IIa, loss_IIb
from .models import Dataset, TrainConfig, TransitionP, TransitionPV
from .predict import PredictionIb, PredictionPV, predict_Ia, predict_Ib, predict_IIa

__all__ = [
    "LOSSES",
    "BaselineDiagnostics",
    "BlackBoxModel",
    "Dataset",
    "DatasetManifest",
    "PredictionIb",
    "PredictionPV",
    "TrainConfig",
    "TrainResult",
    "TransitionP",
    "TransitionPV",
    "attitude_error",
    "loss_Ia",
    "loss_Ib",
    "loss_IIa",
    "loss_IIb",
    "loss_for",
    "make_loss_fn",
    "predict_Ia",
    "predict_Ib",
    "predict_IIa",
    "read_dataset",
    "train",
    "train_blackbox_baseline",
    "write_dataset",
    "write_loss_history",
]
