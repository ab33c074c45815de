import json
import os

import numpy as np
import pytest

from paracalc.lp import block_sup_norms
from paracalc.noise import NoiseSpec, sample_field
from paracalc.spectral import Field, TorusGrid

ORACLES = os.path.join(os.path.dirname(__file__), "oracles", "frozen.json")


@pytest.fixture(scope="session")
def frozen():
    with open(ORACLES) as fh:
        return json.load(fh)


def sample(alpha, seed=0, n=4096, partition="smooth", law="gaussian-holder"):
    return sample_field(NoiseSpec(alpha, seed, law), TorusGrid(1, n, partition))


def weierstrass(grid, alpha):
    """W_alpha = sum_{j=1}^{J} 2^{-j alpha} cos(2^j x)."""
    x = grid.coordinates()[0]
    return Field(grid, sum(2.0 ** (-j * alpha) * np.cos(2 ** j * x) for j in range(1, grid.J + 1)))


def high_blocks(f, jmin):
    """Largest block sup norm among blocks j >= jmin."""
    return float(block_sup_norms(f)[jmin + 1:].max())
