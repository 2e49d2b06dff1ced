import zlib

import numpy as np
import pytest

from gnarch.graph_data import GraphDataset, canonicalize


def make_graph(name, num_nodes, edges, labels=None, features=None, num_classes=2):
    if features is None:
        rng = np.random.default_rng(zlib.crc32(name.encode()))
        features = rng.normal(size=(num_nodes, 4))
    return GraphDataset(
        name=name,
        num_nodes=num_nodes,
        edges=canonicalize(edges, num_nodes),
        features=np.asarray(features, dtype=np.float64),
        num_classes=num_classes,
        labels=None if labels is None else np.asarray(labels, dtype=np.int64),
        metric="accuracy",
    ).validate()


@pytest.fixture
def triangle():
    return make_graph("triangle", 3, [(0, 1), (1, 2), (0, 2)], labels=[0, 0, 1])


@pytest.fixture
def path4():
    return make_graph("path4", 4, [(0, 1), (1, 2), (2, 3)], labels=[0, 0, 1, 1])


@pytest.fixture
def star5():
    # center 0 labeled 0, leaves labeled 1: every edge joins different labels
    return make_graph("star5", 5, [(0, i) for i in range(1, 5)], labels=[0, 1, 1, 1, 1])


@pytest.fixture
def two_triangles():
    return make_graph(
        "two_triangles",
        6,
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
        labels=[0, 0, 0, 1, 1, 1],
    )


def random_graph(seed, max_nodes=30):
    """A random graph with seeded size, density, labels and features."""
    rng = np.random.default_rng([seed, 77])
    n = int(rng.integers(5, max_nodes + 1))
    p = float(rng.uniform(0.08, 0.5))
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    num_classes = int(rng.integers(2, 5))
    labels = rng.integers(0, num_classes, size=n)
    features = rng.normal(size=(n, int(rng.integers(3, 9))))
    if rng.random() < 0.3:
        features[0] = 0.0  # exercise the zero-vector cosine convention
    return make_graph(f"rand{seed}", n, edges, labels=labels, features=features,
                      num_classes=num_classes)
