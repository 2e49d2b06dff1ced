import json

import numpy as np
import pytest

from gnarch.errors import DataError, FileFormatError
from gnarch.graph_data import GraphDataset, canonicalize, load_dataset, save_dataset

from conftest import make_graph


def test_canonicalize_dedupes_orients_and_sorts():
    edges = canonicalize([(2, 1), (1, 2), (0, 0), (3, 0), (1, 2)], 4)
    assert edges == [(0, 3), (1, 2)]


def test_canonicalize_rejects_out_of_range():
    with pytest.raises(DataError):
        canonicalize([(0, 5)], 4)
    with pytest.raises(DataError):
        canonicalize([(-1, 2)], 4)


def test_validate_catches_bad_labels():
    with pytest.raises(DataError):
        make_graph("bad", 3, [(0, 1)], labels=[0, 1, 7], num_classes=2)


def test_validate_catches_feature_shape():
    g = make_graph("ok", 3, [(0, 1)])
    g.features = g.features[:2]
    with pytest.raises(DataError):
        g.validate()


def test_save_load_round_trip(tmp_path, two_triangles):
    root = tmp_path / "ds"
    save_dataset(two_triangles, root)
    for fname in ["meta.json", "edges.tsv", "features.csv", "labels.tsv", "splits.json"]:
        assert (root / fname).exists() or fname in ("labels.tsv", "splits.json")
    loaded = load_dataset(root)
    assert loaded.name == two_triangles.name
    assert loaded.num_nodes == two_triangles.num_nodes
    assert loaded.edges == two_triangles.edges
    # float64 values survive the text round trip exactly
    assert np.array_equal(loaded.features, two_triangles.features)
    assert np.array_equal(loaded.labels, two_triangles.labels)
    assert loaded.metric == two_triangles.metric


def test_save_load_with_splits(tmp_path, path4):
    path4.splits = {"train": [0, 1], "val": [2], "test": [3]}
    root = tmp_path / "ds"
    save_dataset(path4, root)
    loaded = load_dataset(root)
    assert loaded.splits == {"train": [0, 1], "val": [2], "test": [3]}


def test_load_reports_bad_edge_line(tmp_path, path4):
    root = tmp_path / "ds"
    save_dataset(path4, root)
    lines = (root / "edges.tsv").read_text().splitlines()
    lines[1] = "0\tnot_a_node"
    (root / "edges.tsv").write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError) as err:
        load_dataset(root)
    assert "edges.tsv:2" in str(err.value)


def test_load_rejects_edge_count_mismatch(tmp_path, path4):
    root = tmp_path / "ds"
    save_dataset(path4, root)
    meta = json.loads((root / "meta.json").read_text())
    meta["num_edges"] = 99
    (root / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(FileFormatError):
        load_dataset(root)


def test_load_rejects_missing_meta(tmp_path):
    with pytest.raises(FileFormatError):
        load_dataset(tmp_path)


def test_load_rejects_out_of_range_label(tmp_path, path4):
    root = tmp_path / "ds"
    save_dataset(path4, root)
    (root / "labels.tsv").write_text("0\n1\n1\n9\n")
    with pytest.raises(FileFormatError) as err:
        load_dataset(root)
    assert "labels.tsv" in str(err.value)


def test_load_rejects_split_out_of_bounds(tmp_path, path4):
    path4.splits = {"train": [0], "val": [1], "test": [2]}
    root = tmp_path / "ds"
    save_dataset(path4, root)
    (root / "splits.json").write_text(json.dumps({"train": [0], "val": [1], "test": [99]}))
    with pytest.raises(FileFormatError):
        load_dataset(root)


def test_unlabeled_dataset_round_trip(tmp_path):
    g = make_graph("nolabels", 4, [(0, 1), (2, 3)])
    g.labels = None
    root = tmp_path / "ds"
    save_dataset(g, root)
    assert not (root / "labels.tsv").exists()
    loaded = load_dataset(root)
    assert loaded.labels is None
