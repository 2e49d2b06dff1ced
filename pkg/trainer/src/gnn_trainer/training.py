"""Hyperparameter resolution and the full-batch training loop."""

import logging
import random

import torch
import torch.nn.functional as F

from .dataset import GraphTensors
from .model import ArchModel
from .space import RequestError

log = logging.getLogger(__name__)

DEFAULT_HYPERPARAMS = {
    "pre_layers": 1,
    "post_layers": 1,
    "dimension": 64,
    "dropout": 0.5,
    "optimizer": "adam",
    "lr": 0.01,
    "weight_decay": 0.0005,
    "epochs": 200,
}


def resolve_hyperparams(given) -> dict:
    """Overlay request hyperparameters on the defaults and validate them.

    Unknown keys are logged and ignored so older trainers tolerate newer
    clients; known keys are type-coerced and range-checked.
    """
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise RequestError("hyperparams must be a JSON object")
    unknown = sorted(set(given) - set(DEFAULT_HYPERPARAMS))
    if unknown:
        log.warning("ignoring unknown hyperparameters: %s", ", ".join(unknown))
    merged = dict(DEFAULT_HYPERPARAMS)
    merged.update({k: given[k] for k in given if k in DEFAULT_HYPERPARAMS})
    try:
        for key in ("pre_layers", "post_layers", "dimension", "epochs"):
            merged[key] = int(merged[key])
        for key in ("dropout", "lr", "weight_decay"):
            merged[key] = float(merged[key])
    except (TypeError, ValueError):
        raise RequestError(f"non-numeric hyperparameter among {sorted(given)}")
    if merged["epochs"] < 1:
        raise RequestError(f"epochs must be >= 1, got {merged['epochs']}")
    if merged["dimension"] < 1:
        raise RequestError(f"dimension must be >= 1, got {merged['dimension']}")
    if merged["pre_layers"] < 0 or merged["post_layers"] < 0:
        raise RequestError("pre_layers and post_layers must be >= 0")
    if not 0.0 <= merged["dropout"] < 1.0:
        raise RequestError(f"dropout must be in [0, 1), got {merged['dropout']}")
    if merged["lr"] <= 0:
        raise RequestError(f"lr must be positive, got {merged['lr']}")
    if merged["weight_decay"] < 0:
        raise RequestError(f"weight_decay must be >= 0, got {merged['weight_decay']}")
    if merged["optimizer"] not in ("adam", "sgd"):
        raise RequestError(f"optimizer must be adam or sgd, got {merged['optimizer']!r}")
    return merged


def make_splits(labeled_idx, seed) -> dict:
    """Seeded 60/20/20 split over the labeled nodes, for datasets shipping none."""
    order = list(labeled_idx)
    random.Random(seed).shuffle(order)
    cut1 = int(len(order) * 0.6)
    cut2 = int(len(order) * 0.8)
    return {
        "train": sorted(order[:cut1]),
        "val": sorted(order[cut1:cut2]),
        "test": sorted(order[cut2:]),
    }


def _split_tensors(data: GraphTensors, seed):
    labeled = (data.labels >= 0).nonzero(as_tuple=True)[0].tolist()
    if data.splits is not None:
        splits = {part: [i for i in idx if data.labels[i] >= 0]
                  for part, idx in data.splits.items()}
    else:
        splits = make_splits(labeled, seed)
    for part in ("train", "val", "test"):
        if not splits[part]:
            raise RequestError(f"dataset {data.name!r}: {part} split has no labeled nodes")
    return {part: torch.tensor(idx, dtype=torch.long) for part, idx in splits.items()}


def _accuracy(logits, labels) -> float:
    return (logits.argmax(dim=-1) == labels).float().mean().item()


def run_job(data: GraphTensors, macro, ops, seed, hyperparams):
    """Train one architecture on one dataset; return (valid_perf, test_perf).

    valid_perf is the best validation accuracy over the epochs; test_perf is
    the test accuracy at that same epoch. Seeding covers parameter init,
    dropout, and the generated split (when the dataset ships none), so a
    repeated request reproduces its numbers on CPU.
    """
    hp = resolve_hyperparams(hyperparams)
    if data.metric != "accuracy":
        raise RequestError(
            f"metric {data.metric!r} not supported; this trainer scores accuracy"
        )
    if data.num_classes < 2:
        raise RequestError(f"dataset {data.name!r} has {data.num_classes} classes")
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    parts = _split_tensors(data, seed)

    model = ArchModel(
        macro, ops,
        feature_dim=data.features.shape[1],
        num_classes=data.num_classes,
        hidden=hp["dimension"],
        dropout=hp["dropout"],
        pre_layers=hp["pre_layers"],
        post_layers=hp["post_layers"],
    )
    if hp["optimizer"] == "adam":
        opt = torch.optim.Adam(model.parameters(), lr=hp["lr"], weight_decay=hp["weight_decay"])
    else:
        opt = torch.optim.SGD(model.parameters(), lr=hp["lr"], weight_decay=hp["weight_decay"])

    features, labels = data.features, data.labels
    best_val, test_at_best = -1.0, 0.0
    for _ in range(hp["epochs"]):
        model.train()
        opt.zero_grad()
        logits = model(features, data)
        loss = F.cross_entropy(logits[parts["train"]], labels[parts["train"]])
        loss.backward()
        opt.step()

        model.eval()
        with torch.no_grad():
            logits = model(features, data)
            val = _accuracy(logits[parts["val"]], labels[parts["val"]])
            if val > best_val:
                best_val = val
                test_at_best = _accuracy(logits[parts["test"]], labels[parts["test"]])
    return best_val, test_at_best
