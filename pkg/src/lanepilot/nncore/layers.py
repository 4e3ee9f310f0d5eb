"""Convolution, ReLU and dense layers with hand-written backward passes.

No autodiff anywhere: every gradient below is derived by hand and checked
against central finite differences in the test suite. Arrays are float32 in
normal operation; all functions also accept float64 so the gradient checker
can re-run them at higher precision.
"""

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Input shape incompatible with a layer."""


def conv_out_size(size: int, stride: int) -> int:
    """Output spatial size under SAME padding: ceil(size / stride)."""
    return -(-size // stride)


def same_pad_amounts(size: int, kernel: int, stride: int) -> tuple[int, int]:
    """(before, after) zero-padding so that output size = ceil(size/stride)."""
    out = conv_out_size(size, stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


@dataclass
class ConvLayer:
    kernels: np.ndarray  # [out_channels, in_channels, k, k]
    bias: np.ndarray     # [out_channels]
    stride: int
    same_padding: bool = True

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[2] != self.kernels.shape[3]:
            raise ShapeError(f"kernels must be [out, in, k, k], got {self.kernels.shape}")
        if self.kernel_size % 2 != 1:
            raise ShapeError(f"kernel size must be odd, got {self.kernel_size}")
        if self.stride not in (1, 2):
            raise ShapeError(f"stride must be 1 or 2, got {self.stride}")
        if self.bias.shape != (self.out_channels,):
            raise ShapeError(f"bias must be [{self.out_channels}], got {self.bias.shape}")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def kernel_size(self) -> int:
        return self.kernels.shape[2]


@dataclass
class DenseLayer:
    weights: np.ndarray  # [out_units, in_units]
    bias: np.ndarray     # [out_units]

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be 2D, got {self.weights.shape}")
        if self.bias.shape != (self.out_units,):
            raise ShapeError(f"bias must be [{self.out_units}], got {self.bias.shape}")

    @property
    def out_units(self) -> int:
        return self.weights.shape[0]

    @property
    def in_units(self) -> int:
        return self.weights.shape[1]


def _pad_same(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    pt, pb = same_pad_amounts(x.shape[2], k, stride)
    pl, pr = same_pad_amounts(x.shape[3], k, stride)
    if pt == pb == pl == pr == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))


def _im2col(x_pad: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """Gather k*k patches into [n, c, k, k, ho, wo] (copies, contiguous)."""
    n, c = x_pad.shape[:2]
    cols = np.empty((n, c, k, k, ho, wo), dtype=x_pad.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = x_pad[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
    return cols


def _col2im(cols: np.ndarray, padded_shape: tuple, k: int, stride: int) -> np.ndarray:
    """Scatter-add of _im2col; cols is [n, c, k, k, ho, wo]."""
    ho, wo = cols.shape[4], cols.shape[5]
    x_pad = np.zeros(padded_shape, dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            x_pad[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += cols[:, :, i, j]
    return x_pad


def conv2d_forward_batch(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """SAME-padded convolution of a batch [n, c, h, w] -> [n, c', h', w']."""
    n, c, h, w = x.shape
    if c != layer.in_channels:
        raise ShapeError(f"input has {c} channels, layer expects {layer.in_channels}")
    k, s = layer.kernel_size, layer.stride
    ho, wo = conv_out_size(h, s), conv_out_size(w, s)
    cols = _im2col(_pad_same(x, k, s), k, s, ho, wo)
    cols_mat = cols.reshape(n, c * k * k, ho * wo)
    w_mat = layer.kernels.reshape(layer.out_channels, c * k * k)
    y = np.matmul(w_mat, cols_mat) + layer.bias[:, None]
    return y.reshape(n, layer.out_channels, ho, wo)


def conv2d_backward_batch(
    x: np.ndarray, layer: ConvLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward_batch: (grad_input, grad_kernels, grad_bias)."""
    n, c, h, w = x.shape
    k, s = layer.kernel_size, layer.stride
    o = layer.out_channels
    ho, wo = conv_out_size(h, s), conv_out_size(w, s)
    if grad_out.shape != (n, o, ho, wo):
        raise ShapeError(f"grad_out shape {grad_out.shape} != {(n, o, ho, wo)}")

    x_pad = _pad_same(x, k, s)
    cols_mat = _im2col(x_pad, k, s, ho, wo).reshape(n, c * k * k, ho * wo)
    g_mat = grad_out.reshape(n, o, ho * wo)

    grad_bias = g_mat.sum(axis=(0, 2))
    g_flat = g_mat.transpose(1, 0, 2).reshape(o, n * ho * wo)
    cols_flat = cols_mat.transpose(1, 0, 2).reshape(c * k * k, n * ho * wo)
    grad_kernels = (g_flat @ cols_flat.T).reshape(layer.kernels.shape)

    w_mat = layer.kernels.reshape(o, c * k * k)
    grad_cols = np.matmul(w_mat.T, g_mat).reshape(n, c, k, k, ho, wo)
    grad_pad = _col2im(grad_cols, x_pad.shape, k, s)
    pt, _ = same_pad_amounts(h, k, s)
    pl, _ = same_pad_amounts(w, k, s)
    grad_input = grad_pad[:, :, pt:pt + h, pl:pl + w]
    return grad_input, grad_kernels, grad_bias


def conv2d_forward(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Single-image convolution [c, h, w] -> [c', h', w']."""
    return conv2d_forward_batch(x[None], layer)[0]


def conv2d_backward(
    x: np.ndarray, layer: ConvLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gi, gk, gb = conv2d_backward_batch(x[None], layer, grad_out[None])
    return gi[0], gk, gb


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # tie at exactly 0 passes zero gradient
    return np.where(x > 0, grad_out, 0)


def dense_forward(x: np.ndarray, layer: DenseLayer) -> np.ndarray:
    """y = W x + b for a flat vector [in] or batch [n, in]."""
    if x.shape[-1] != layer.in_units:
        raise ShapeError(f"input length {x.shape[-1]} != in_units {layer.in_units}")
    return x @ layer.weights.T + layer.bias


def dense_backward(
    x: np.ndarray, layer: DenseLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(grad_input, grad_weights, grad_bias); batch gradients sum over rows."""
    if x.ndim == 1:
        grad_w = np.outer(grad_out, x)
        grad_b = grad_out.copy()
    else:
        grad_w = grad_out.T @ x
        grad_b = grad_out.sum(axis=0)
    grad_in = grad_out @ layer.weights
    return grad_in, grad_w, grad_b


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. pred."""
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (2.0 / diff.size) * diff
    return loss, grad.astype(pred.dtype)
