"""Model file format.

Layout: magic bytes ``STRN1\\0``, a 4-byte little-endian header length, a JSON
header (config, layer shapes, seed, training metadata), then the raw
little-endian float32 arrays in layer order, kernels/weights before bias.
Round-trips are bit-exact.
"""

import json
import struct

import numpy as np

from .layers import ConvLayer, DenseLayer
from .network import NetConfig, Network

MAGIC = b"STRN1\x00"


class ModelFormatError(ValueError):
    """Model file is corrupt or inconsistent with its header."""


def _header(net: Network, training_meta: dict | None) -> dict:
    cfg = net.config
    return {
        "format": 1,
        "config": {
            "profile": cfg.profile,
            "input_height": cfg.input_height,
            "input_width": cfg.input_width,
            "input_channels": cfg.input_channels,
            "conv_channels": list(cfg.conv_channels),
            "hidden_units": cfg.hidden_units,
            "seed": cfg.seed,
        },
        "layers": [
            *({"type": "conv", "kernels": list(l.kernels.shape),
               "bias": list(l.bias.shape), "stride": l.stride} for l in net.conv_layers),
            *({"type": "dense", "weights": list(l.weights.shape),
               "bias": list(l.bias.shape)} for l in net.dense_layers),
        ],
        "training": training_meta,
    }


def save_model(net: Network, path, training_meta: dict | None = None) -> None:
    header = json.dumps(_header(net, training_meta), sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for layer in net.conv_layers:
            f.write(np.ascontiguousarray(layer.kernels, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())
        for layer in net.dense_layers:
            f.write(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())


def load_model(path) -> Network:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"bad magic bytes in {path}")
    offset = len(MAGIC)
    if len(blob) < offset + 4:
        raise ModelFormatError("truncated header length")
    (header_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if len(blob) < offset + header_len:
        raise ModelFormatError("truncated header")
    try:
        header = json.loads(blob[offset:offset + header_len])
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"unparseable header: {e}") from e
    offset += header_len

    cfg_d = header.get("config", {})
    try:
        cfg = NetConfig(
            profile=cfg_d["profile"],
            input_height=cfg_d["input_height"],
            input_width=cfg_d["input_width"],
            input_channels=cfg_d["input_channels"],
            conv_channels=tuple(cfg_d["conv_channels"]),
            hidden_units=cfg_d["hidden_units"],
            seed=cfg_d["seed"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"bad config in header: {e}") from e

    layer_specs = header.get("layers", [])
    if [s.get("type") for s in layer_specs] != ["conv"] * 4 + ["dense"] * 2:
        raise ModelFormatError("header must declare 4 conv layers then 2 dense layers")

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(blob):
            raise ModelFormatError("file truncated: fewer weight bytes than the header declares")
        arr = np.frombuffer(blob[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
        return arr

    conv_layers = [
        ConvLayer(take(s["kernels"]), take(s["bias"]), s["stride"])
        for s in layer_specs[:4]
    ]
    dense_layers = [DenseLayer(take(s["weights"]), take(s["bias"])) for s in layer_specs[4:]]
    if offset != len(blob):
        raise ModelFormatError(f"{len(blob) - offset} trailing bytes after weight arrays")
    return Network(config=cfg, conv_layers=conv_layers, dense_layers=dense_layers)
