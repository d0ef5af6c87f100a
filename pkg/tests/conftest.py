import numpy as np
import pytest

from qsamp import build_general, build_rho_chain


@pytest.fixture
def golden():
    """Two-state chain with unit rates everywhere; its eigenvector ratio is
    the golden ratio (root of the 2x2 characteristic polynomial)."""
    return build_general(2, [(1, 2, 1.0), (2, 1, 1.0)], {1: 1.0})


@pytest.fixture
def rho1_chain10():
    return build_rho_chain(10, 1.0)


def random_reversible_generator(rng, n_max=12):
    """Random reversible absorbing generator: a connected conductance graph
    gives detailed balance by construction, plus a random absorption set."""
    n = int(rng.integers(2, n_max + 1))
    eta = np.exp(rng.uniform(-1.5, 1.5, n))
    edges = [(i, int(rng.integers(0, i))) for i in range(1, n)]  # random tree
    extra = rng.integers(0, n, size=(n, 2))
    edges += [(int(a), int(b)) for a, b in extra if a != b]
    transitions = []
    seen = set()
    for a, b in edges:
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        c = np.exp(rng.uniform(-1.0, 1.0))
        transitions.append((a + 1, b + 1, c / eta[a]))
        transitions.append((b + 1, a + 1, c / eta[b]))
    n_abs = int(rng.integers(1, n + 1))
    states = rng.choice(n, size=n_abs, replace=False)
    absorption = {int(s) + 1: float(np.exp(rng.uniform(-1.0, 1.0))) for s in states}
    return build_general(n, transitions, absorption)


def random_birth_death(rng, n_max=200, low=0.1, high=10.0):
    n = int(rng.integers(2, n_max + 1))
    b = np.exp(rng.uniform(np.log(low), np.log(high), n - 1))
    d = np.exp(rng.uniform(np.log(low), np.log(high), n))
    return b, d
