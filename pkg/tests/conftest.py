import numpy as np
import pytest

from tailcausal.graphs import Dag


def random_dag(rng, d, edge_prob=0.4):
    """Random DAG: random vertex order, each forward pair kept with edge_prob."""
    perm = rng.permutation(np.arange(1, d + 1))
    edges = set()
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < edge_prob:
                edges.add((int(perm[a]), int(perm[b])))
    return Dag(d, frozenset(edges))


def reachability_oracle(dag):
    """Boolean-closure oracle: R = I | A | A^2 | ... until fixpoint."""
    a = np.zeros((dag.d, dag.d), dtype=bool)
    for i, j in dag.edges:
        a[i - 1, j - 1] = True
    r = np.eye(dag.d, dtype=bool)
    while True:
        nxt = r | (r @ a)
        if (nxt == r).all():
            return nxt.astype(int)
        r = nxt


@pytest.fixture
def diamond():
    """1 -> {2, 3} -> 4."""
    return Dag(4, frozenset({(1, 2), (1, 3), (2, 4), (3, 4)}))
