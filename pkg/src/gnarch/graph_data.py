"""Graph dataset model and on-disk format.

A dataset directory holds:

- ``meta.json``     — name, counts, feature_dim, num_classes, metric, description?
- ``edges.tsv``     — one undirected edge per line, two whitespace-separated ints
- ``features.csv``  — num_nodes rows of feature_dim comma-separated floats, no header
- ``labels.tsv``    — optional, one integer per node (-1 = unlabeled)
- ``splits.json``   — optional, {"train": [...], "val": [...], "test": [...]}

Edges are canonicalized on load: self-loops dropped (with a warning),
duplicates merged, endpoints ordered u < v, list sorted.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, FileFormatError

log = logging.getLogger(__name__)

METRICS = ("accuracy", "rocauc")

SPLIT_KEYS = ("train", "val", "test")


@dataclass
class DatasetMeta:
    """Descriptive header of a dataset, as stored in meta.json."""

    name: str
    num_nodes: int = 0
    num_edges: int = 0
    feature_dim: int = 0
    num_classes: int = 0
    metric: str = "accuracy"
    description: str | None = None

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "num_nodes": self.num_nodes,
            "num_edges": self.num_edges,
            "feature_dim": self.feature_dim,
            "num_classes": self.num_classes,
            "metric": self.metric,
        }
        if self.description is not None:
            out["description"] = self.description
        return out


@dataclass
class GraphDataset:
    """An undirected attributed graph with optional labels and splits."""

    name: str
    num_nodes: int
    edges: list[tuple[int, int]]
    features: np.ndarray
    num_classes: int = 0
    labels: np.ndarray | None = None
    metric: str = "accuracy"
    description: str | None = None
    splits: dict[str, list[int]] | None = field(default=None)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    def meta(self) -> DatasetMeta:
        return DatasetMeta(
            name=self.name,
            num_nodes=self.num_nodes,
            num_edges=self.num_edges,
            feature_dim=self.feature_dim,
            num_classes=self.num_classes,
            metric=self.metric,
            description=self.description,
        )

    def validate(self):
        if self.num_nodes < 1:
            raise DataError(f"dataset {self.name!r} has no nodes")
        if self.features.ndim != 2 or self.features.shape[0] != self.num_nodes:
            raise DataError(
                f"dataset {self.name!r}: features shape {self.features.shape} "
                f"does not match num_nodes={self.num_nodes}"
            )
        if not np.all(np.isfinite(self.features)):
            raise DataError(f"dataset {self.name!r}: non-finite feature values")
        if self.labels is not None:
            if self.labels.shape != (self.num_nodes,):
                raise DataError(
                    f"dataset {self.name!r}: labels shape {self.labels.shape} "
                    f"does not match num_nodes={self.num_nodes}"
                )
            bad = (self.labels < -1) | (self.labels >= max(self.num_classes, 1))
            if self.num_classes and np.any(bad):
                raise DataError(
                    f"dataset {self.name!r}: label values outside [-1, {self.num_classes})"
                )
        if self.metric not in METRICS:
            raise DataError(f"dataset {self.name!r}: unknown metric {self.metric!r}")
        for u, v in self.edges:
            if not (0 <= u < v < self.num_nodes):
                raise DataError(f"dataset {self.name!r}: edge ({u}, {v}) not canonical")
        if self.splits is not None:
            for split_name in self.splits:
                if split_name not in SPLIT_KEYS:
                    raise DataError(f"dataset {self.name!r}: unknown split {split_name!r}")
                for idx in self.splits[split_name]:
                    if not 0 <= idx < self.num_nodes:
                        raise DataError(
                            f"dataset {self.name!r}: split {split_name!r} index {idx} "
                            f"out of range"
                        )
        return self


def canonicalize(edges, num_nodes: int) -> list[tuple[int, int]]:
    """Normalize an undirected edge list: drop self-loops, merge duplicates,
    order endpoints u < v, sort."""
    out = set()
    loops = 0
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise DataError(f"edge ({u}, {v}) references a node outside [0, {num_nodes})")
        if u == v:
            loops += 1
            continue
        out.add((u, v) if u < v else (v, u))
    if loops:
        log.warning("dropped %d self-loop(s) during canonicalization", loops)
    return sorted(out)


def _require(meta: dict, key: str, path: Path):
    if key not in meta:
        raise FileFormatError(path, f"meta.json missing required key {key!r}")
    return meta[key]


def load_dataset(dataset_dir) -> GraphDataset:
    """Load a dataset directory, validating every file against the format."""
    root = Path(dataset_dir)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise FileFormatError(meta_path, "file not found")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(meta_path, f"invalid JSON: {exc}") from exc

    name = str(_require(meta, "name", meta_path))
    num_nodes = int(_require(meta, "num_nodes", meta_path))
    num_edges = int(_require(meta, "num_edges", meta_path))
    feature_dim = int(_require(meta, "feature_dim", meta_path))
    num_classes = int(_require(meta, "num_classes", meta_path))
    metric = str(_require(meta, "metric", meta_path))
    if metric not in METRICS:
        raise FileFormatError(meta_path, f"metric must be one of {METRICS}, got {metric!r}")
    if num_nodes < 1:
        raise FileFormatError(meta_path, f"num_nodes must be >= 1, got {num_nodes}")

    edges_path = root / "edges.tsv"
    if not edges_path.is_file():
        raise FileFormatError(edges_path, "file not found")
    raw_edges = []
    with edges_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FileFormatError(edges_path, f"expected two node ids, got {line!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise FileFormatError(edges_path, f"non-integer node id in {line!r}", lineno)
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise FileFormatError(
                    edges_path, f"node id out of range [0, {num_nodes}) in {line!r}", lineno
                )
            raw_edges.append((u, v))
    edges = canonicalize(raw_edges, num_nodes)
    if len(edges) != num_edges:
        raise FileFormatError(
            edges_path,
            f"canonical edge count {len(edges)} does not match meta num_edges {num_edges}",
        )

    feat_path = root / "features.csv"
    if not feat_path.is_file():
        raise FileFormatError(feat_path, "file not found")
    try:
        frame = pd.read_csv(feat_path, header=None, dtype=np.float64, float_precision="round_trip")
    except Exception as exc:
        raise FileFormatError(feat_path, f"could not parse: {exc}") from exc
    features = frame.to_numpy(dtype=np.float64)
    if features.shape[0] != num_nodes:
        raise FileFormatError(
            feat_path, f"row count {features.shape[0]} does not match num_nodes {num_nodes}"
        )
    if features.shape[1] != feature_dim:
        raise FileFormatError(
            feat_path, f"column count {features.shape[1]} does not match feature_dim {feature_dim}"
        )

    labels = None
    labels_path = root / "labels.tsv"
    if labels_path.is_file():
        values = []
        with labels_path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    label = int(line)
                except ValueError:
                    raise FileFormatError(labels_path, f"non-integer label {line!r}", lineno)
                if label < -1 or label >= num_classes:
                    raise FileFormatError(
                        labels_path, f"label {label} outside [-1, {num_classes})", lineno
                    )
                values.append(label)
        if len(values) != num_nodes:
            raise FileFormatError(
                labels_path, f"row count {len(values)} does not match num_nodes {num_nodes}"
            )
        labels = np.array(values, dtype=np.int64)

    splits = None
    splits_path = root / "splits.json"
    if splits_path.is_file():
        try:
            splits = json.loads(splits_path.read_text())
        except json.JSONDecodeError as exc:
            raise FileFormatError(splits_path, f"invalid JSON: {exc}") from exc
        if not isinstance(splits, dict):
            raise FileFormatError(splits_path, "expected an object with train/val/test lists")
        for key, idxs in splits.items():
            if key not in SPLIT_KEYS:
                raise FileFormatError(splits_path, f"unknown split {key!r}")
            for idx in idxs:
                if not (isinstance(idx, int) and 0 <= idx < num_nodes):
                    raise FileFormatError(
                        splits_path, f"split {key!r} index {idx!r} out of range [0, {num_nodes})"
                    )

    dataset = GraphDataset(
        name=name,
        num_nodes=num_nodes,
        edges=edges,
        features=features,
        num_classes=num_classes,
        labels=labels,
        metric=metric,
        description=meta.get("description"),
        splits=splits,
    )
    return dataset.validate()


def save_dataset(dataset: GraphDataset, dataset_dir):
    """Write a dataset directory. load_dataset(save_dataset(g)) reproduces g."""
    dataset.validate()
    root = Path(dataset_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / "meta.json").write_text(json.dumps(dataset.meta().to_json(), indent=2) + "\n")
    with (root / "edges.tsv").open("w") as fh:
        for u, v in dataset.edges:
            fh.write(f"{u}\t{v}\n")
    # %.17g round-trips float64 exactly, so the text file loses no precision
    pd.DataFrame(dataset.features).to_csv(
        root / "features.csv", header=False, index=False,
        float_format=lambda v: format(float(v), ".17g"),
    )
    if dataset.labels is not None:
        with (root / "labels.tsv").open("w") as fh:
            for label in dataset.labels:
                fh.write(f"{int(label)}\n")
    if dataset.splits is not None:
        (root / "splits.json").write_text(json.dumps(dataset.splits) + "\n")
    return root
