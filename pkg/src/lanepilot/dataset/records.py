"""Sample records and on-disk dataset layout.

A dataset directory holds ``frames/%06d.pgm``, a ``log.csv`` with header
``timestamp_us,frame_file,steering_rad,speed_mps``, and a ``manifest.json``
with dimensions, count, provenance and seed.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pgm import read_pgm, write_pgm

LOG_HEADER = ["timestamp_us", "frame_file", "steering_rad", "speed_mps"]
MAX_STEERING = math.pi / 2


@dataclass
class SamplePair:
    """One (camera frame, steering angle) training tuple."""
    timestamp_us: int
    frame: "str | np.ndarray"  # file name relative to the dataset root, or pixels
    steering: float
    speed: float = 0.0

    def __post_init__(self):
        if self.timestamp_us < 0:
            raise ValueError(f"negative timestamp {self.timestamp_us}")
        if not math.isfinite(self.steering) or abs(self.steering) > MAX_STEERING:
            raise ValueError(f"steering {self.steering} out of [-pi/2, pi/2]")


@dataclass
class DatasetManifest:
    samples: list[SamplePair]
    frame_height: int
    frame_width: int
    provenance: str  # "ingested" | "synthetic"
    seed: int = 0
    root: Path | None = None

    def __post_init__(self):
        ts = [s.timestamp_us for s in self.samples]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample timestamps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.samples)

    def frame_array(self, sample: SamplePair) -> np.ndarray:
        if isinstance(sample.frame, np.ndarray):
            return sample.frame
        if self.root is None:
            raise ValueError("manifest has file-backed frames but no root path")
        return read_pgm(self.root / sample.frame)

    def load_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(frames [n, 1, h, w] float32 in [0, 1], steering [n] float32)."""
        n = len(self.samples)
        x = np.empty((n, 1, self.frame_height, self.frame_width), dtype=np.float32)
        y = np.empty(n, dtype=np.float32)
        for i, s in enumerate(self.samples):
            img = self.frame_array(s)
            if img.shape != (self.frame_height, self.frame_width):
                raise ValueError(f"frame {i} has shape {img.shape}, "
                                 f"manifest says {(self.frame_height, self.frame_width)}")
            x[i, 0] = img.astype(np.float32) / 255.0
            y[i] = s.steering
        return x, y

    def subset(self, indices) -> "DatasetManifest":
        picked = [self.samples[i] for i in indices]
        return DatasetManifest(samples=picked, frame_height=self.frame_height,
                               frame_width=self.frame_width, provenance=self.provenance,
                               seed=self.seed, root=self.root)

    def save(self, root) -> "DatasetManifest":
        """Write frames/, log.csv and manifest.json under root."""
        root = Path(root)
        (root / "frames").mkdir(parents=True, exist_ok=True)
        saved = []
        for i, s in enumerate(self.samples):
            name = f"frames/{i:06d}.pgm"
            write_pgm(root / name, self.frame_array(s))
            saved.append(SamplePair(s.timestamp_us, name, s.steering, s.speed))
        with open(root / "log.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(LOG_HEADER)
            for s in saved:
                w.writerow([s.timestamp_us, s.frame, repr(s.steering), repr(s.speed)])
        meta = {"height": self.frame_height, "width": self.frame_width,
                "count": len(saved), "provenance": self.provenance, "seed": self.seed}
        with open(root / "manifest.json", "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
        return DatasetManifest(samples=saved, frame_height=self.frame_height,
                               frame_width=self.frame_width, provenance=self.provenance,
                               seed=self.seed, root=root)


def load_manifest(root) -> DatasetManifest:
    root = Path(root)
    with open(root / "manifest.json") as f:
        meta = json.load(f)
    samples = []
    with open(root / "log.csv", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != LOG_HEADER:
            raise ValueError(f"{root}/log.csv: unexpected header {header}")
        for row in reader:
            samples.append(SamplePair(int(row[0]), row[1], float(row[2]), float(row[3])))
    if len(samples) != meta["count"]:
        raise ValueError(f"{root}: log.csv has {len(samples)} rows, manifest says {meta['count']}")
    manifest = DatasetManifest(samples=samples, frame_height=meta["height"],
                               frame_width=meta["width"], provenance=meta["provenance"],
                               seed=meta.get("seed", 0), root=root)
    for s in samples:
        if not (root / s.frame).exists():
            raise FileNotFoundError(f"missing frame file {s.frame} under {root}")
    return manifest
