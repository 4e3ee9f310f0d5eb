"""Timestamp pairing, 80/20 splitting and batch iteration."""

import bisect
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..rng import epoch_rng, make_rng
from .records import DatasetManifest, SamplePair

DEFAULT_MAX_SKEW_US = 50_000  # half the 10 Hz sensor period
TRAIN_FRACTION = 0.8
MIN_SPLIT_SAMPLES = 5


@dataclass
class PairingResult:
    pairs: list[SamplePair]
    dropped: int


def pair_by_timestamp(
    image_log: Sequence[tuple],
    steering_log: Sequence[tuple],
    max_skew_us: int = DEFAULT_MAX_SKEW_US,
) -> PairingResult:
    """Pair each image with the steering record of nearest timestamp.

    image_log rows are (timestamp_us, frame_ref); steering_log rows are
    (timestamp_us, steering_rad[, speed_mps]). Both must be sorted by
    timestamp. Images with no steering record within max_skew_us are dropped
    and counted. An exact skew tie resolves to the earlier record.
    """
    if not image_log or not steering_log:
        raise ValueError("empty log")
    image_ts = [int(r[0]) for r in image_log]
    steer_ts = [int(r[0]) for r in steering_log]
    for name, ts in (("image_log", image_ts), ("steering_log", steer_ts)):
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"{name} is not sorted by timestamp")

    pairs: list[SamplePair] = []
    dropped = 0
    for ts, frame_ref in ((int(r[0]), r[1]) for r in image_log):
        i = bisect.bisect_left(steer_ts, ts)
        best = None
        for j in (i - 1, i):  # earlier candidate first, so ties keep it
            if 0 <= j < len(steer_ts):
                skew = abs(steer_ts[j] - ts)
                if best is None or skew < best[0]:
                    best = (skew, j)
        if best is None or best[0] > max_skew_us:
            dropped += 1
            continue
        rec = steering_log[best[1]]
        speed = float(rec[2]) if len(rec) > 2 else 0.0
        pairs.append(SamplePair(ts, frame_ref, float(rec[1]), speed))
    return PairingResult(pairs=pairs, dropped=dropped)


def split_80_20(manifest: DatasetManifest, seed: int) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministic shuffled split: |train| = floor(0.8 n), disjoint and exhaustive."""
    n = len(manifest)
    if n < MIN_SPLIT_SAMPLES:
        raise ValueError(f"need at least {MIN_SPLIT_SAMPLES} samples to split, got {n}")
    perm = make_rng(seed).permutation(n)
    n_train = int(TRAIN_FRACTION * n)
    train_idx = np.sort(perm[:n_train])
    val_idx = np.sort(perm[n_train:])
    return manifest.subset(train_idx), manifest.subset(val_idx)


def batch_iter(n_samples: int, batch_size: int, epoch: int, seed: int) -> Iterator[np.ndarray]:
    """Index batches covering every sample exactly once, in an order that is
    a pure function of (seed, epoch). The final batch may be short."""
    if n_samples < 1:
        raise ValueError("empty train set")
    order = epoch_rng(seed, epoch).permutation(n_samples)
    for start in range(0, n_samples, batch_size):
        yield order[start:start + batch_size]
