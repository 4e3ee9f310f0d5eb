from .layers import (
    ConvLayer,
    DenseLayer,
    ShapeError,
    conv2d_backward,
    conv2d_forward,
    conv_out_size,
    dense_backward,
    dense_forward,
    mse_loss,
    relu,
    relu_backward,
    same_pad_amounts,
)
from .network import NetConfig, Network, init_network, predict_steering
from .modelio import ModelFormatError, load_model, save_model
from .training import LossCurve, TrainConfig, TrainingDiverged, train, write_loss_csv

__all__ = [
    "ConvLayer",
    "DenseLayer",
    "LossCurve",
    "ModelFormatError",
    "NetConfig",
    "Network",
    "ShapeError",
    "TrainConfig",
    "TrainingDiverged",
    "conv2d_backward",
    "conv2d_forward",
    "conv_out_size",
    "dense_backward",
    "dense_forward",
    "init_network",
    "load_model",
    "mse_loss",
    "predict_steering",
    "relu",
    "relu_backward",
    "same_pad_amounts",
    "save_model",
    "train",
    "write_loss_csv",
]
