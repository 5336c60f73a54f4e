from .checkpoint import load_checkpoint, save_checkpoint
from .model import FusionRegressor, ModelConfig, Prediction, denormalize, normalize_targets, predict_batch
from .train import TrainConfig, TrainResult, sgd_step, train

__all__ = ["FusionRegressor", "ModelConfig", "Prediction", "TrainConfig", "TrainResult", "denormalize",
           "load_checkpoint", "normalize_targets", "predict_batch", "save_checkpoint", "sgd_step", "train"]
