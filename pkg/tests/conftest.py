import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ifsdrift import AffineMap, MapFamily, SamplingMeasure, Schedule

MAPLE_MAPS = [
    ([[0.8, 0.0], [0.0, 0.8]], [0.1, 0.04]),
    ([[0.5, 0.0], [0.0, 0.5]], [0.25, 0.4]),
    ([[0.355, 0.355], [0.355, -0.355]], [0.266, 0.078]),
    ([[0.355, -0.355], [-0.355, -0.355]], [0.378, 0.434]),
]
MAPLE_WEIGHTS = [
    [0.23, 0.22, 0.22, 0.33],
    [0.5, 0.2, 0.2, 0.1],
    [0.3, 0.1, 0.4, 0.2],
]
EPOCH_LENGTH = 30_000
TV_BOUND = 0.6

CONFIG_PATH = Path(__file__).parent.parent / "examples" / "maple_leaf.json"


@pytest.fixture(scope="session")
def maple_family():
    return MapFamily([AffineMap(m, b) for m, b in MAPLE_MAPS])


@pytest.fixture(scope="session")
def maple_measures():
    return [SamplingMeasure(w) for w in MAPLE_WEIGHTS]


@pytest.fixture(scope="session")
def maple_schedule(maple_measures):
    return Schedule([(m, EPOCH_LENGTH) for m in maple_measures], TV_BOUND)


def random_discrete_measure(rng, max_atoms=20, d=2, scale=1.0):
    from ifsdrift import DiscreteMeasure

    n = int(rng.integers(1, max_atoms + 1))
    pts = rng.uniform(-scale, scale, size=(n, d))
    wts = rng.random(n) + 0.05
    return DiscreteMeasure(pts, wts, normalize=True)
