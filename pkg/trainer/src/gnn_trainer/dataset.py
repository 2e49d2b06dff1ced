"""Dataset directory loader.

The protocol names datasets by directory. The layout:

- ``meta.json``     name, num_nodes, num_edges, feature_dim, num_classes, metric
- ``edges.tsv``     one undirected edge per line, two whitespace-separated ints
- ``features.csv``  num_nodes rows of comma-separated floats, no header
- ``labels.tsv``    one integer per node, -1 marking unlabeled nodes
- ``splits.json``   optional {"train": [...], "val": [...], "test": [...]}

Graphs served here are small enough to keep every derived operator resident,
so normalized adjacencies are built once at load and shared across requests.
"""

import json
from pathlib import Path

import numpy as np
import torch


class DatasetError(ValueError):
    """A dataset directory is missing pieces or internally inconsistent."""


class GraphTensors:
    """A loaded dataset plus the cached message-passing operators.

    ``edge_index`` holds both directions of every undirected edge and no
    self-loops. ``adj_norm`` is the symmetrically normalized adjacency with
    self-loops added; ``adj_noself_norm`` the same without them;
    ``lap_scaled`` the rescaled Laplacian (spectrum bound fixed at 2) used by
    the spectral layer. ``edge_index_self`` appends one self-loop per node
    for attention, so isolated nodes still attend to themselves.
    """

    def __init__(self, name, features, labels, num_classes, metric, edge_index, splits):
        self.name = name
        self.features = features
        self.labels = labels
        self.num_classes = num_classes
        self.metric = metric
        self.edge_index = edge_index
        self.splits = splits
        n = features.shape[0]
        self.num_nodes = n

        loops = torch.arange(n, dtype=torch.long)
        self.edge_index_self = torch.cat(
            [edge_index, torch.stack([loops, loops])], dim=1
        )
        deg = torch.zeros(n)
        deg.index_add_(0, edge_index[1], torch.ones(edge_index.shape[1]))
        self.degree = deg

        self.adj_norm = _sym_norm(edge_index, n, add_self_loops=True)
        self.adj_noself_norm = _sym_norm(edge_index, n, add_self_loops=False)
        lap = self.adj_noself_norm.coalesce()
        self.lap_scaled = torch.sparse_coo_tensor(
            lap.indices(), -lap.values(), lap.shape, check_invariants=False
        ).coalesce()


def _sym_norm(edge_index, num_nodes, add_self_loops):
    if add_self_loops:
        loops = torch.arange(num_nodes, dtype=torch.long)
        edge_index = torch.cat([edge_index, torch.stack([loops, loops])], dim=1)
    src, dst = edge_index
    deg = torch.zeros(num_nodes)
    deg.index_add_(0, dst, torch.ones(edge_index.shape[1]))
    inv_sqrt = deg.clamp(min=1.0).pow(-0.5)
    values = inv_sqrt[src] * inv_sqrt[dst]
    return torch.sparse_coo_tensor(
        edge_index, values, (num_nodes, num_nodes), check_invariants=False
    ).coalesce()


def _read_json(path: Path):
    if not path.is_file():
        raise DatasetError(f"{path} not found")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path} is not valid JSON: {exc}")


def load_dataset_dir(dataset_dir) -> GraphTensors:
    """Load and validate one dataset directory into resident tensors."""
    root = Path(dataset_dir)
    if not root.is_dir():
        raise DatasetError(f"dataset directory {root} not found")
    meta = _read_json(root / "meta.json")
    for key in ("name", "num_nodes", "feature_dim", "num_classes", "metric"):
        if key not in meta:
            raise DatasetError(f"{root / 'meta.json'} is missing {key!r}")
    name = str(meta["name"])
    num_nodes = int(meta["num_nodes"])
    num_classes = int(meta["num_classes"])
    metric = str(meta["metric"])
    if num_nodes < 1:
        raise DatasetError(f"dataset {name!r} has no nodes")

    features_path = root / "features.csv"
    if not features_path.is_file():
        raise DatasetError(f"{features_path} not found")
    features = np.loadtxt(features_path, delimiter=",", dtype=np.float64, ndmin=2)
    if features.shape[0] != num_nodes:
        raise DatasetError(
            f"dataset {name!r}: {features.shape[0]} feature rows for {num_nodes} nodes"
        )
    if int(meta["feature_dim"]) != features.shape[1]:
        raise DatasetError(
            f"dataset {name!r}: feature_dim {meta['feature_dim']} but "
            f"features.csv has {features.shape[1]} columns"
        )
    if not np.all(np.isfinite(features)):
        raise DatasetError(f"dataset {name!r}: non-finite feature values")

    labels_path = root / "labels.tsv"
    if not labels_path.is_file():
        raise DatasetError(f"{labels_path} not found; training needs labels")
    labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=1)
    if labels.shape != (num_nodes,):
        raise DatasetError(f"dataset {name!r}: {labels.shape[0]} labels for {num_nodes} nodes")
    if labels.max(initial=-1) >= num_classes:
        raise DatasetError(f"dataset {name!r}: label values outside [-1, {num_classes})")

    edges_path = root / "edges.tsv"
    if not edges_path.is_file():
        raise DatasetError(f"{edges_path} not found")
    pairs = []
    with edges_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DatasetError(f"{edges_path}:{lineno}: expected two node ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetError(f"{edges_path}:{lineno}: non-integer node id in {line!r}")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise DatasetError(f"{edges_path}:{lineno}: node id out of range")
            if u == v:
                continue
            pairs.append((u, v))
            pairs.append((v, u))
    if pairs:
        edge_index = torch.tensor(sorted(set(pairs)), dtype=torch.long).t().contiguous()
    else:
        edge_index = torch.zeros((2, 0), dtype=torch.long)

    splits = None
    splits_path = root / "splits.json"
    if splits_path.is_file():
        raw = _read_json(splits_path)
        if not isinstance(raw, dict) or set(raw) != {"train", "val", "test"}:
            raise DatasetError(f"{splits_path} must map exactly train/val/test to index lists")
        splits = {}
        for part, idx in raw.items():
            idx = [int(i) for i in idx]
            if any(not 0 <= i < num_nodes for i in idx):
                raise DatasetError(f"{splits_path}: {part} index out of range")
            splits[part] = sorted(set(idx))

    return GraphTensors(
        name=name,
        features=torch.from_numpy(np.ascontiguousarray(features)).float(),
        labels=torch.from_numpy(labels),
        num_classes=num_classes,
        metric=metric,
        edge_index=edge_index,
        splits=splits,
    )
