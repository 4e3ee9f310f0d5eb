"""Plain-SGD training loop with a deterministic per-epoch shuffle."""

from dataclasses import dataclass, field

import numpy as np

from ..rng import epoch_rng
from .layers import (
    conv2d_backward_batch,
    dense_backward,
    mse_loss,
    relu_backward,
)
from .network import Network, forward_batch


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; training aborted."""


@dataclass
class TrainConfig:
    batch_size: int = 100
    epochs: int = 30
    learning_rate: float = 0.3  # tuned on the tiny-profile synthetic data
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class LossCurve:
    """Per-epoch MSE; epoch 0 is the pre-training evaluation."""
    rows: list[tuple[int, float, float]] = field(default_factory=list)  # (epoch, train, val)

    def initial_val(self) -> float:
        return self.rows[0][2]

    def final_val(self) -> float:
        return self.rows[-1][2]


def write_loss_csv(curve: LossCurve, path) -> None:
    with open(path, "w") as f:
        f.write("epoch,train_mse,val_mse\n")
        for epoch, train_mse, val_mse in curve.rows:
            f.write(f"{epoch},{train_mse!r},{val_mse!r}\n")


def _grad_step(net: Network, xb: np.ndarray, yb: np.ndarray, lr: float) -> float:
    """One SGD step on a batch; returns the batch MSE."""
    pred, cache = forward_batch(net, xb, keep_activations=True)
    loss, grad_pred = mse_loss(pred, yb)

    hidden, last = net.dense_layers
    g = grad_pred[:, None]  # d loss / d output, [n, 1]
    g, gw_last, gb_last = dense_backward(cache["dense_in"][1], last, g)
    g = relu_backward(cache["dense_pre"][0], g)
    g, gw_hidden, gb_hidden = dense_backward(cache["dense_in"][0], hidden, g)

    conv_grads = []
    g = g.reshape(cache["conv_pre"][-1].shape)
    for layer, pre, x_in in zip(reversed(net.conv_layers),
                                reversed(cache["conv_pre"]),
                                reversed(cache["conv_in"])):
        g = relu_backward(pre, g)
        g, gk, gb = conv2d_backward_batch(x_in, layer, g)
        conv_grads.append((gk, gb))
    conv_grads.reverse()

    for layer, (gk, gb) in zip(net.conv_layers, conv_grads):
        layer.kernels -= lr * gk
        layer.bias -= lr * gb
    hidden.weights -= lr * gw_hidden
    hidden.bias -= lr * gb_hidden
    last.weights -= lr * gw_last
    last.bias -= lr * gb_last
    return loss


def evaluate_mse(net: Network, x: np.ndarray, y: np.ndarray, batch_size: int = 100) -> float:
    total = 0.0
    for start in range(0, len(x), batch_size):
        pred = forward_batch(net, x[start:start + batch_size])
        diff = pred.astype(np.float64) - y[start:start + batch_size].astype(np.float64)
        total += float(np.sum(diff * diff))
    return total / len(x)


def train(
    net: Network,
    train_data: tuple[np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
) -> tuple[Network, LossCurve]:
    """SGD over shuffled batches: w <- w - lr * (batch-mean gradient).

    The shuffle order is a pure function of (cfg.seed, epoch), so repeated
    runs are bit-identical. The final short batch (when the train set is not
    divisible by batch_size) averages over its actual size.
    """
    x_train, y_train = train_data
    x_val, y_val = val_data
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("empty dataset")
    x_train = x_train.astype(np.float32, copy=False)
    y_train = y_train.astype(np.float32, copy=False)

    net = net.copy()
    curve = LossCurve()
    curve.rows.append((0,
                       evaluate_mse(net, x_train, y_train, cfg.batch_size),
                       evaluate_mse(net, x_val, y_val, cfg.batch_size)))

    n = len(x_train)
    for epoch in range(1, cfg.epochs + 1):
        order = epoch_rng(cfg.seed, epoch).permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss = _grad_step(net, x_train[idx], y_train[idx], cfg.learning_rate)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite batch loss at epoch {epoch}, sample offset {start} "
                    f"(lr={cfg.learning_rate}); reduce the learning rate")
            loss_sum += loss * len(idx)
        curve.rows.append((epoch, loss_sum / n,
                           evaluate_mse(net, x_val, y_val, cfg.batch_size)))
    return net, curve
