import itertools
import json
import pathlib

import numpy as np
import pytest

from kfplace.graphs import bfs_distances, graph_from_matrix
from kfplace.kalman import NetworkSystem

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

# Four-node system with input on node 1; the closed-form targets below are
# the hand-checked truncated sums for single sensors at nodes 1 and 3.
EX1_A = np.array(
    [
        [0.5, 2.1, 0.0, 0.0],
        [0.3, 0.0, 1.5, 0.0],
        [0.0, 0.6, 0.0, 0.5],
        [0.0, 0.0, -0.8, 1.0],
    ]
)
EX1_INPUT = 1

EX1_SIGMA_MU4 = np.array(
    [
        [5.5125, 1.6065, 1.26, -0.504],
        [1.6065, 3.3409, 0.0, -0.7344],
        [1.26, 0.0, 0.36, 0.0],
        [-0.504, -0.7344, 0.0, 0.2304],
    ]
)
EX1_POST_MU4 = np.array(
    [
        [4.41, 0.0, 1.26, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.26, 0.0, 0.36, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)


@pytest.fixture
def ex1_system():
    return NetworkSystem(EX1_A, EX1_INPUT)

@pytest.fixture
def ex1_dmap():
    return bfs_distances(graph_from_matrix(EX1_A), EX1_INPUT)


@pytest.fixture(scope="session")
def client():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from kfplace.service import app
        with TestClient(app, raise_server_exceptions=False) as c:
            yield c


@pytest.fixture
def ex1_payload():
    return json.loads((FIXTURES / "example1.json").read_text())


def min_eig(M) -> float:
    return float(np.linalg.eigvalsh(np.asarray(M)).min())


def enum_knapsack(values, sizes, capacity):
    """Reference 0/1 knapsack by full subset enumeration."""
    best_value, best_pick = 0, ()
    n = len(values)
    for r in range(n + 1):
        for pick in itertools.combinations(range(n), r):
            size = sum(sizes[i] for i in pick)
            if size > capacity:
                continue
            value = sum(values[i] for i in pick)
            if value > best_value:
                best_value, best_pick = value, pick
    return best_value, best_pick


def subset_sums(sizes):
    """All values obtainable as a subset sum of ``sizes``."""
    sums = {0}
    for s in sizes:
        sums |= {t + s for t in sums}
    return sums
