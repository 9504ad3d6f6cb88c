import numpy as np
import pytest

from dynastop.codes import make_gold_codes, modulate
from dynastop.simulate import SimConfig, make_dataset, resolve_config


@pytest.fixture(scope="session")
def gold_codes():
    return make_gold_codes()


@pytest.fixture(scope="session")
def modulated_gold(gold_codes):
    return modulate(gold_codes)


@pytest.fixture(scope="session")
def small_sim():
    """Six-class, two-channel simulated set: fast enough for harness tests."""
    cfg = SimConfig(n_classes=6, n_channels=2, sigma=2.0, seed=77)
    resolved = resolve_config(cfg)
    trials = make_dataset(cfg, 5, resolved=resolved)
    return cfg, resolved, trials


@pytest.fixture
def rng():
    return np.random.default_rng(1729)
