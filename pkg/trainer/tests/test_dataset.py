import json

import numpy as np
import pytest
import torch

from conftest import build_separable_dir
from gnn_trainer.dataset import DatasetError, load_dataset_dir


def test_load_round_trip(separable_dir):
    data = load_dataset_dir(separable_dir)
    assert data.name == "sep"
    assert data.num_nodes == 200
    assert data.num_classes == 4
    assert data.metric == "accuracy"
    assert data.features.shape == (200, 8)
    assert data.features.dtype == torch.float32
    assert data.labels.shape == (200,)
    assert data.labels.dtype == torch.int64
    meta = json.loads((separable_dir / "meta.json").read_text())
    # both directions of every undirected edge, none doubled
    assert data.edge_index.shape == (2, 2 * meta["num_edges"])
    src, dst = data.edge_index
    assert (src != dst).all()
    forward = set(zip(src.tolist(), dst.tolist()))
    assert all((v, u) in forward for u, v in forward)
    assert set(data.splits) == {"train", "val", "test"}
    assert sum(len(v) for v in data.splits.values()) == 200


def test_split_lists_are_disjoint(separable_dir):
    data = load_dataset_dir(separable_dir)
    seen = set()
    for part in ("train", "val", "test"):
        idx = set(data.splits[part])
        assert not idx & seen
        seen |= idx


def test_cached_operators_have_expected_shapes(separable_dir):
    data = load_dataset_dir(separable_dir)
    n = data.num_nodes
    assert data.adj_norm.shape == (n, n)
    assert data.adj_noself_norm.shape == (n, n)
    assert data.lap_scaled.shape == (n, n)
    # self-loop augmentation adds exactly one loop per node
    assert data.edge_index_self.shape[1] == data.edge_index.shape[1] + n
    dense = data.adj_norm.to_dense()
    assert torch.allclose(dense, dense.t())
    # self-loops put every node on the diagonal; the plain adjacency has none
    assert (dense.diagonal() > 0).all()
    assert (data.adj_noself_norm.to_dense().diagonal() == 0).all()


def test_missing_directory_rejected(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_dataset_dir(tmp_path / "nope")


def test_missing_labels_rejected(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    (root / "labels.tsv").unlink()
    with pytest.raises(DatasetError, match="labels"):
        load_dataset_dir(root)


def test_feature_dim_mismatch_rejected(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    meta = json.loads((root / "meta.json").read_text())
    meta["feature_dim"] = 3
    (root / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(DatasetError, match="feature_dim"):
        load_dataset_dir(root)


def test_edge_out_of_range_rejected(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    with (root / "edges.tsv").open("a") as fh:
        fh.write("0\t999\n")
    with pytest.raises(DatasetError, match="out of range"):
        load_dataset_dir(root)


def test_label_out_of_range_rejected(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    labels = (root / "labels.tsv").read_text().splitlines()
    labels[0] = "17"
    (root / "labels.tsv").write_text("\n".join(labels) + "\n")
    with pytest.raises(DatasetError, match="label values"):
        load_dataset_dir(root)


def test_bad_splits_shape_rejected(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    (root / "splits.json").write_text(json.dumps({"train": [0], "val": [1]}))
    with pytest.raises(DatasetError, match="train/val/test"):
        load_dataset_dir(root)


def test_self_loops_in_file_are_dropped(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    with (root / "edges.tsv").open("a") as fh:
        fh.write("7\t7\n")
    data = load_dataset_dir(root)
    src, dst = data.edge_index
    assert (src != dst).all()


def test_duplicate_edges_collapse(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    first = (root / "edges.tsv").read_text().splitlines()[0]
    with (root / "edges.tsv").open("a") as fh:
        fh.write(first + "\n")
    a = load_dataset_dir(root)
    b = load_dataset_dir(build_separable_dir(tmp_path / "ds2"))
    assert a.edge_index.shape == b.edge_index.shape


def test_splits_file_optional(tmp_path):
    root = build_separable_dir(tmp_path / "ds")
    (root / "splits.json").unlink()
    data = load_dataset_dir(root)
    assert data.splits is None


def test_fixture_is_deterministic(tmp_path):
    a = build_separable_dir(tmp_path / "a")
    b = build_separable_dir(tmp_path / "b")
    feats_a = np.loadtxt(a / "features.csv", delimiter=",")
    feats_b = np.loadtxt(b / "features.csv", delimiter=",")
    assert (feats_a == feats_b).all()
    assert (a / "edges.tsv").read_text() == (b / "edges.tsv").read_text()
    assert (a / "splits.json").read_text() == (b / "splits.json").read_text()
