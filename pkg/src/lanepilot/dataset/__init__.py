from .pgm import read_pgm, write_pgm
from .records import DatasetManifest, SamplePair, load_manifest
from .pipeline import PairingResult, batch_iter, pair_by_timestamp, split_80_20
from .synthetic import AugmentSpec, generate_synthetic

__all__ = [
    "AugmentSpec",
    "DatasetManifest",
    "PairingResult",
    "SamplePair",
    "batch_iter",
    "generate_synthetic",
    "load_manifest",
    "pair_by_timestamp",
    "read_pgm",
    "split_80_20",
    "write_pgm",
]
