import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from namethat.embeddings import SyntheticSpec, generate_with_geometry

DATA_DIR = Path(__file__).parent / "data"

# Fixture geometry shared by evaluation and acceptance tests. The "certified"
# set is cleanly separable; the "harder" one has correlated centers and wider
# intra-class spread, so the nearest-key rule actually makes mistakes.
CERTIFIED_SPEC = SyntheticSpec(
    classes=30, samples_per_class=20, dim=384,
    center_max_cos=0.5, intra_min_cos=0.9, nuisance_dim=20, seed=7,
)
HARDER_SPEC = SyntheticSpec(
    classes=30, samples_per_class=20, dim=384,
    center_max_cos=0.6, center_min_cos=0.45,
    intra_min_cos=0.7, nuisance_dim=20, seed=1,
)

# Dot products of unit-normalized embeddings never leave [-1, 1], so the
# evaluation runs use a sharp temperature to get near-one-hot mixing.
SHARP_TEMPERATURE = 1.0 / 384.0


@pytest.fixture(scope="session")
def certified_set():
    embeddings, geometry = generate_with_geometry(CERTIFIED_SPEC)
    return embeddings, geometry


@pytest.fixture(scope="session")
def harder_set():
    embeddings, geometry = generate_with_geometry(HARDER_SPEC)
    return embeddings, geometry


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
