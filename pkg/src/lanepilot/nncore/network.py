"""Steering network: four conv layers then two dense layers.

The stack is Conv5x5/s2, Conv5x5/s2, Conv5x5/s2, Conv3x3/s1, Dense, Dense,
with a ReLU after every layer except the last. The final output is a single
steering angle in radians, no squashing.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..rng import make_rng
from .layers import (
    ConvLayer,
    DenseLayer,
    ShapeError,
    conv2d_forward_batch,
    conv_out_size,
    dense_forward,
    relu,
)

CONV_SPECS = ((5, 2), (5, 2), (5, 2), (3, 1))  # (kernel, stride) per conv layer

PROFILES = {
    "full": dict(input_height=66, input_width=200, input_channels=1,
                 conv_channels=(24, 36, 48, 64), hidden_units=100),
    "tiny": dict(input_height=32, input_width=64, input_channels=1,
                 conv_channels=(8, 12, 16, 16), hidden_units=32),
}

BIAS_INIT = 0.1
WEIGHT_INIT_RANGE = 0.1


@dataclass(frozen=True)
class NetConfig:
    input_height: int
    input_width: int
    input_channels: int
    conv_channels: tuple[int, int, int, int]
    hidden_units: int
    seed: int = 0
    profile: str = "custom"

    def __post_init__(self):
        dims = (self.input_height, self.input_width, self.input_channels,
                self.hidden_units, *self.conv_channels)
        if len(self.conv_channels) != 4:
            raise ValueError("conv_channels must list exactly 4 widths")
        if any(int(d) <= 0 for d in dims):
            raise ValueError(f"all config dimensions must be positive, got {self}")

    @classmethod
    def from_profile(cls, name: str, seed: int = 0) -> "NetConfig":
        if name not in PROFILES:
            raise ValueError(f"unknown profile {name!r}, expected one of {sorted(PROFILES)}")
        p = PROFILES[name]
        return cls(profile=name, seed=seed,
                   conv_channels=tuple(p["conv_channels"]),
                   **{k: p[k] for k in ("input_height", "input_width", "input_channels", "hidden_units")})

    def conv_output_shapes(self) -> list[tuple[int, int, int]]:
        """[channels, height, width] after each conv layer."""
        h, w = self.input_height, self.input_width
        shapes = []
        for ch, (_, stride) in zip(self.conv_channels, CONV_SPECS):
            h, w = conv_out_size(h, stride), conv_out_size(w, stride)
            shapes.append((ch, h, w))
        return shapes

    def flat_units(self) -> int:
        c, h, w = self.conv_output_shapes()[-1]
        return c * h * w


@dataclass
class Network:
    config: NetConfig
    conv_layers: list[ConvLayer] = field(default_factory=list)
    dense_layers: list[DenseLayer] = field(default_factory=list)

    def __post_init__(self):
        if self.conv_layers and (len(self.conv_layers) != 4 or len(self.dense_layers) != 2):
            raise ValueError("network must have exactly 4 conv and 2 dense layers")

    @property
    def layers(self) -> list:
        return [*self.conv_layers, *self.dense_layers]

    def parameter_count(self) -> int:
        return sum(l.kernels.size + l.bias.size for l in self.conv_layers) + \
            sum(l.weights.size + l.bias.size for l in self.dense_layers)

    def copy(self) -> "Network":
        return Network(
            config=self.config,
            conv_layers=[replace(l, kernels=l.kernels.copy(), bias=l.bias.copy())
                         for l in self.conv_layers],
            dense_layers=[replace(l, weights=l.weights.copy(), bias=l.bias.copy())
                          for l in self.dense_layers],
        )


def init_network(cfg: NetConfig) -> Network:
    """Fresh network: biases are the constant 0.1, weights i.i.d. uniform
    on [-0.1, 0.1] from a PCG64 stream seeded by cfg.seed."""
    rng = make_rng(cfg.seed)

    def uniform(shape):
        return rng.uniform(-WEIGHT_INIT_RANGE, WEIGHT_INIT_RANGE, size=shape).astype(np.float32)

    def bias(n):
        return np.full(n, BIAS_INIT, dtype=np.float32)

    conv_layers = []
    in_ch = cfg.input_channels
    for out_ch, (k, stride) in zip(cfg.conv_channels, CONV_SPECS):
        conv_layers.append(ConvLayer(uniform((out_ch, in_ch, k, k)), bias(out_ch), stride))
        in_ch = out_ch

    flat = cfg.flat_units()
    dense_layers = [
        DenseLayer(uniform((cfg.hidden_units, flat)), bias(cfg.hidden_units)),
        DenseLayer(uniform((1, cfg.hidden_units)), bias(1)),
    ]
    return Network(config=cfg, conv_layers=conv_layers, dense_layers=dense_layers)


def forward_batch(net: Network, x: np.ndarray, keep_activations: bool = False):
    """Run a batch [n, c, h, w] through the network.

    Returns predictions [n] or, with keep_activations, (predictions, cache)
    where cache holds every layer input and pre-activation for backprop.
    """
    cache = {"conv_in": [], "conv_pre": [], "dense_in": [], "dense_pre": []} if keep_activations else None
    a = x
    for layer in net.conv_layers:
        pre = conv2d_forward_batch(a, layer)
        if keep_activations:
            cache["conv_in"].append(a)
            cache["conv_pre"].append(pre)
        a = relu(pre)
    a = a.reshape(a.shape[0], -1)
    hidden, last = net.dense_layers
    pre = dense_forward(a, hidden)
    if keep_activations:
        cache["dense_in"].append(a)
        cache["dense_pre"].append(pre)
    a = relu(pre)
    out = dense_forward(a, last)
    if keep_activations:
        cache["dense_in"].append(a)
        cache["dense_pre"].append(out)
    pred = out[:, 0]
    return (pred, cache) if keep_activations else pred


def predict_steering(net: Network, frame: np.ndarray) -> float:
    """Steering angle in radians for one frame [c, h, w] with pixels in [0, 1]."""
    cfg = net.config
    expected = (cfg.input_channels, cfg.input_height, cfg.input_width)
    if frame.shape != expected:
        raise ShapeError(f"frame shape {frame.shape} != network input {expected}")
    value = float(forward_batch(net, frame[None].astype(np.float32, copy=False))[0])
    if not np.isfinite(value):
        raise FloatingPointError(f"non-finite steering prediction {value}")
    return value
