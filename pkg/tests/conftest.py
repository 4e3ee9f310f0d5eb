import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lanepilot import nncore
from lanepilot.dataset import AugmentSpec, generate_synthetic, split_80_20
from lanepilot.simworld.world import build_world, builtin_scenario

TRAIN_SEED = 7
BASE_FRAMES = 500


@pytest.fixture(scope="session")
def tiny_dataset():
    """Deterministic synthetic dataset: 500 base frames x 9 views."""
    world = build_world(builtin_scenario("tiny-train"))
    return generate_synthetic(world, BASE_FRAMES, AugmentSpec(), seed=TRAIN_SEED)


@pytest.fixture(scope="session")
def tiny_split(tiny_dataset):
    train_m, val_m = split_80_20(tiny_dataset, seed=TRAIN_SEED)
    return train_m.load_arrays(), val_m.load_arrays()


@pytest.fixture(scope="session")
def trained_tiny(tiny_split):
    """Tiny-profile network trained with the defaults (30 epochs, batch 100).

    Returns (net, curve, seconds) so the acceptance suite can check the
    training budget without re-running it.
    """
    import time
    (x_train, y_train), (x_val, y_val) = tiny_split
    net = nncore.init_network(nncore.NetConfig.from_profile("tiny", seed=TRAIN_SEED))
    cfg = nncore.TrainConfig(batch_size=100, epochs=30, learning_rate=0.3,
                             seed=TRAIN_SEED)
    t0 = time.perf_counter()
    net, curve = nncore.train(net, (x_train, y_train), (x_val, y_val), cfg)
    return net, curve, time.perf_counter() - t0


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(1234))
