"""Shared fixtures: an on-disk separable dataset and in-memory toy graphs."""

import json
from pathlib import Path

import numpy as np
import pytest
import torch

from gnn_trainer.dataset import GraphTensors


def build_separable_dir(root, num_nodes=200, num_classes=4, seed=0) -> Path:
    """Write a dataset directory whose classes are linearly separable.

    Each node's first ``num_classes`` feature columns carry a one-hot bump of
    +2.0 on its class over 0.25-scale noise, the rest pure noise. Edges chain
    same-class nodes plus ~30 random extra links, and the splits file holds a
    stratified 60/20/20 partition. Any sane classifier clears 0.9 here.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    labels = np.arange(num_nodes) % num_classes
    feats = rng.normal(scale=0.25, size=(num_nodes, 8))
    feats[np.arange(num_nodes), labels] += 2.0

    edges = set()
    for c in range(num_classes):
        members = [i for i in range(num_nodes) if labels[i] == c]
        for a, b in zip(members, members[1:]):
            edges.add((a, b))
    while len(edges) < num_nodes + 30:
        u, v = sorted(rng.integers(0, num_nodes, size=2).tolist())
        if u != v:
            edges.add((u, v))
    edges = sorted(edges)

    splits = {"train": [], "val": [], "test": []}
    for c in range(num_classes):
        members = [i for i in range(num_nodes) if labels[i] == c]
        rng.shuffle(members)
        k = len(members)
        splits["train"] += members[: int(k * 0.6)]
        splits["val"] += members[int(k * 0.6): int(k * 0.8)]
        splits["test"] += members[int(k * 0.8):]
    splits = {part: sorted(idx) for part, idx in splits.items()}

    meta = {
        "name": "sep",
        "num_nodes": num_nodes,
        "num_edges": len(edges),
        "feature_dim": 8,
        "num_classes": num_classes,
        "metric": "accuracy",
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    (root / "edges.tsv").write_text("".join(f"{u}\t{v}\n" for u, v in edges))
    np.savetxt(root / "features.csv", feats, delimiter=",", fmt="%.17g")
    (root / "labels.tsv").write_text("".join(f"{label}\n" for label in labels))
    (root / "splits.json").write_text(json.dumps(splits) + "\n")
    return root


def graph_from_edges(num_nodes, undirected_edges, feature_dim=6, num_classes=2, seed=0,
                     metric="accuracy", splits=None):
    """In-memory GraphTensors over explicit undirected edges, random payload."""
    rng = np.random.default_rng(seed)
    features = torch.from_numpy(rng.normal(size=(num_nodes, feature_dim))).float()
    labels = torch.from_numpy(rng.integers(0, num_classes, size=num_nodes))
    pairs = set()
    for u, v in undirected_edges:
        pairs.add((u, v))
        pairs.add((v, u))
    if pairs:
        edge_index = torch.tensor(sorted(pairs), dtype=torch.long).t().contiguous()
    else:
        edge_index = torch.zeros((2, 0), dtype=torch.long)
    return GraphTensors("fx", features, labels, num_classes, metric, edge_index, splits)


def triangle_graph(**kwargs):
    return graph_from_edges(3, [(0, 1), (0, 2), (1, 2)], **kwargs)


@pytest.fixture(scope="session")
def separable_dir(tmp_path_factory):
    return build_separable_dir(tmp_path_factory.mktemp("sepds"))
