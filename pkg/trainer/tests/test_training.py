import time

import pytest

from conftest import graph_from_edges
from gnn_trainer.dataset import load_dataset_dir
from gnn_trainer.space import RequestError
from gnn_trainer.training import DEFAULT_HYPERPARAMS, make_splits, resolve_hyperparams, run_job


def test_defaults_fill_missing_keys():
    hp = resolve_hyperparams({"lr": 0.1, "epochs": 5})
    assert hp["lr"] == 0.1
    assert hp["epochs"] == 5
    assert hp["dimension"] == DEFAULT_HYPERPARAMS["dimension"]
    assert hp["optimizer"] == "adam"


def test_unknown_keys_are_ignored():
    hp = resolve_hyperparams({"warmup": 10})
    assert "warmup" not in hp
    assert hp == resolve_hyperparams(None)


def test_hyperparam_validation():
    for bad in (
        {"epochs": 0},
        {"dropout": 1.0},
        {"dropout": -0.1},
        {"optimizer": "rmsprop"},
        {"lr": 0.0},
        {"weight_decay": -1},
        {"dimension": 0},
        {"lr": "fast"},
    ):
        with pytest.raises(RequestError):
            resolve_hyperparams(bad)
    with pytest.raises(RequestError, match="JSON object"):
        resolve_hyperparams([1, 2])


def test_make_splits_partitions_and_repeats():
    idx = list(range(50))
    a = make_splits(idx, seed=9)
    b = make_splits(idx, seed=9)
    assert a == b
    assert sorted(a["train"] + a["val"] + a["test"]) == idx
    assert len(a["train"]) == 30 and len(a["val"]) == 10 and len(a["test"]) == 10
    assert make_splits(idx, seed=10) != a


def test_separable_fixture_reaches_point_nine(separable_dir):
    data = load_dataset_dir(separable_dir)
    start = time.monotonic()
    valid_perf, test_perf = run_job(data, (0, 0, 0, 0), ("gcn",) * 4, seed=0, hyperparams=None)
    elapsed = time.monotonic() - start
    assert valid_perf >= 0.9
    assert 0.0 <= test_perf <= 1.0
    assert elapsed < 60.0


def test_same_request_reproduces_its_numbers(separable_dir):
    data = load_dataset_dir(separable_dir)
    hp = {"epochs": 40}
    first = run_job(data, (0, 0, 1, 3), ("gcn", "gat", "sage", "gin"), seed=11, hyperparams=hp)
    second = run_job(data, (0, 0, 1, 3), ("gcn", "gat", "sage", "gin"), seed=11, hyperparams=hp)
    assert abs(first[0] - second[0]) < 1e-6
    assert abs(first[1] - second[1]) < 1e-6


def test_generated_split_used_when_dataset_ships_none(separable_dir, tmp_path):
    import shutil

    root = tmp_path / "nosplits"
    shutil.copytree(separable_dir, root)
    (root / "splits.json").unlink()
    data = load_dataset_dir(root)
    valid_perf, _ = run_job(data, (0, 0, 0, 0), ("gcn",) * 4, seed=0,
                            hyperparams={"epochs": 60})
    assert valid_perf >= 0.9


def test_sgd_optimizer_also_trains(separable_dir):
    data = load_dataset_dir(separable_dir)
    valid_perf, _ = run_job(
        data, (0, 0, 0, 0), ("gcn",) * 4, seed=0,
        hyperparams={"optimizer": "sgd", "lr": 0.2, "epochs": 60},
    )
    assert valid_perf >= 0.9


def test_unsupported_metric_rejected():
    g = graph_from_edges(10, [(i, i + 1) for i in range(9)], metric="rocauc",
                         num_classes=2)
    with pytest.raises(RequestError, match="not supported"):
        run_job(g, (0, 0, 0, 0), ("gcn",) * 4, seed=0, hyperparams=None)


def test_single_class_dataset_rejected():
    g = graph_from_edges(10, [(i, i + 1) for i in range(9)], num_classes=1)
    with pytest.raises(RequestError, match="classes"):
        run_job(g, (0, 0, 0, 0), ("gcn",) * 4, seed=0, hyperparams=None)


def test_empty_test_split_rejected():
    splits = {"train": list(range(6)), "val": [6, 7], "test": []}
    g = graph_from_edges(10, [(i, i + 1) for i in range(9)], splits=splits)
    with pytest.raises(RequestError, match="test split"):
        run_job(g, (0, 0, 0, 0), ("gcn",) * 4, seed=0, hyperparams={"epochs": 1})


def test_unlabeled_nodes_leave_their_split():
    # node 0 is unlabeled (-1): it must drop out of the train split silently
    g = graph_from_edges(12, [(i, i + 1) for i in range(11)], num_classes=2,
                         splits={"train": list(range(8)), "val": [8, 9], "test": [10, 11]})
    g.labels[0] = -1
    valid_perf, test_perf = run_job(g, (0, 0, 0, 0), ("gcn",) * 4, seed=0,
                                    hyperparams={"epochs": 2})
    assert 0.0 <= valid_perf <= 1.0
    assert 0.0 <= test_perf <= 1.0


def test_fully_unlabeled_split_rejected():
    g = graph_from_edges(10, [(i, i + 1) for i in range(9)], num_classes=2,
                         splits={"train": [0, 1], "val": [2], "test": [3]})
    g.labels[2] = -1
    with pytest.raises(RequestError, match="val split"):
        run_job(g, (0, 0, 0, 0), ("gcn",) * 4, seed=0, hyperparams={"epochs": 1})
