import math

import numpy as np
import pytest

from app.models.database import DatabaseSpace
from app.models.distribution import Distribution
from app.services import mechanism_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def binary_space():
    return DatabaseSpace((0, 1), 2)


@pytest.fixture
def rr_quarter(binary_space):
    return mechanism_model.make_randomized_response(binary_space, 0.25)


@pytest.fixture
def rr_single():
    return mechanism_model.make_randomized_response(DatabaseSpace((0, 1), 1), 0.25)


def subset_tight_delta(p: Distribution, q: Distribution, epsilon: float) -> float:
    """Exhaustive max over events S of p(S) - e^eps q(S) and its mirror."""
    labels = sorted(set(p.outcomes) | set(q.outcomes), key=str)
    members = (np.arange(2 ** len(labels))[:, None] >> np.arange(len(labels))) & 1
    ps = members @ np.array([p.prob(a) for a in labels])
    qs = members @ np.array([q.prob(a) for a in labels])
    factor = math.exp(epsilon)
    return float(max(0.0, np.max(ps - factor * qs), np.max(qs - factor * ps)))


def random_dist(rng, size, prefix="o"):
    return Distribution([f"{prefix}{k}" for k in range(size)], rng.dirichlet(np.ones(size)))
