import random

import numpy as np
import pytest

from hopf_renorm.characters import Character
from hopf_renorm.graphs import bubble, enumerate_1pi_graphs, nested_self_energy
from hopf_renorm.hopf import HopfAlgebra
from hopf_renorm.laurent import LaurentSeries


def universe(max_loops=2, ext=(2, 3)):
    out = []
    for e in ext:
        out.extend(enumerate_1pi_graphs(max_loops, e))
    return out


def random_series(rng: random.Random, poles: int, order: int = 8) -> LaurentSeries:
    low = -rng.randint(0, poles)
    coeffs = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(order - low + 1)]
    return LaurentSeries(low, coeffs, order)


def random_character(alg: HopfAlgebra, labels, rng: random.Random, order: int = 8) -> Character:
    vals = {lab: random_series(rng, alg.loops(lab), order) for lab in labels}
    return Character(alg, vals, order)


def two_loop_fixture(c1, d1, a, b, e, order=8):
    """gamma(B) = c1/z + d1, gamma(G2) = a/z^2 + b/z + e on the bubble and its nesting."""
    alg = HopfAlgebra()
    lb = alg.register(bubble(), "B")
    lg = alg.register(nested_self_energy(), "G2")
    gamma = Character(alg, {
        lb: LaurentSeries(-1, [c1, d1], order),
        lg: LaurentSeries(-2, [a, b, e], order),
    }, order)
    return alg, lb, lg, gamma


@pytest.fixture(scope="session")
def small_universe():
    alg = HopfAlgebra()
    graphs = universe(2)
    labels = sorted({alg.register(g) for g in graphs})
    return alg, labels


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def nprng():
    return np.random.default_rng(7)
