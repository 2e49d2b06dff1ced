"""Graph property vectors.

Sixteen scalar properties summarize a dataset. Four of them walk shortest
paths and are too expensive on large graphs, so they are computed on the
induced subgraph of a seeded uniform node sample capped at
``SamplingConfig.max_nodes``; below the cap the sample is the whole graph
and sampled and exact computations coincide.

Values that are undefined on a given graph (assortativity with zero degree
variance, homophily with no labeled edge, eigenvector centrality when power
iteration cannot converge) are NaN, serialized as the string ``"NaN"``.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import DataError, FileFormatError
from .graph_data import GraphDataset

log = logging.getLogger(__name__)

# Canonical property order. Index into this tuple is the property index used
# by confidence tables, weight vectors and similarity reports.
PROPERTY_NAMES = (
    "avg_clustering",
    "avg_betweenness",
    "density",
    "avg_degree_centrality",
    "avg_closeness",
    "avg_degree",
    "edge_count",
    "graph_diameter",
    "avg_shortest_path",
    "assortativity",
    "avg_eigenvector",
    "feature_dim",
    "node_count",
    "feature_diversity",
    "connected_components",
    "label_homophily",
)

# Properties computed on the sampled subgraph rather than the full graph.
SAMPLED_PROPERTIES = frozenset(
    {"avg_betweenness", "avg_closeness", "graph_diameter", "avg_shortest_path"}
)

NUM_PROPERTIES = len(PROPERTY_NAMES)

POWER_ITER_MAX = 1000
POWER_ITER_TOL = 1e-8


@dataclass
class SamplingConfig:
    """Controls the node sample and the feature-diversity pair sample."""

    max_nodes: int = 1000
    pair_samples: int = 10000
    seed: int = 0


@dataclass
class PropertyVector:
    """The 16 property values of one dataset, in canonical order."""

    dataset: str
    values: dict[str, float]
    seed: int = 0
    sample_size: int = 0
    computed_at: float = field(default=0.0, repr=False)

    def __post_init__(self):
        missing = [n for n in PROPERTY_NAMES if n not in self.values]
        if missing:
            raise DataError(f"property vector for {self.dataset!r} missing {missing}")
        # keep canonical ordering regardless of input order
        self.values = {n: float(self.values[n]) for n in PROPERTY_NAMES}

    def as_array(self) -> np.ndarray:
        return np.array([self.values[n] for n in PROPERTY_NAMES], dtype=np.float64)

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "sample_size": self.sample_size,
            "values": {n: _float_out(self.values[n]) for n in PROPERTY_NAMES},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PropertyVector":
        try:
            values = {n: _float_in(v) for n, v in obj["values"].items()}
            return cls(
                dataset=obj["dataset"],
                values=values,
                seed=int(obj.get("seed", 0)),
                sample_size=int(obj.get("sample_size", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed property vector object: {exc}") from exc


def _float_out(x: float):
    return "NaN" if np.isnan(x) else float(x)


def _float_in(x) -> float:
    if isinstance(x, str):
        if x == "NaN":
            return float("nan")
        raise DataError(f"unexpected string value {x!r} in property vector")
    return float(x)


def save_properties(vector: PropertyVector, path):
    Path(path).write_text(json.dumps(vector.to_json(), indent=2) + "\n")


def load_properties(path) -> PropertyVector:
    p = Path(path)
    if not p.is_file():
        raise FileFormatError(p, "file not found")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(p, f"invalid JSON: {exc}") from exc
    return PropertyVector.from_json(obj)


def property_lines(values: dict[str, float]) -> str:
    """Render the 16 values as ``name: value`` lines for reports and prompts."""
    return "\n".join(f"{n}: {_fmt(values[n])}" for n in PROPERTY_NAMES)


def _fmt(x: float) -> str:
    return "NaN" if np.isnan(x) else f"{x:.6g}"


def _sample_nodes(num_nodes: int, cfg: SamplingConfig) -> np.ndarray:
    if num_nodes <= cfg.max_nodes:
        return np.arange(num_nodes)
    rng = np.random.default_rng([cfg.seed, 1])
    return np.sort(rng.choice(num_nodes, size=cfg.max_nodes, replace=False))


def _assortativity(edges, degrees) -> float:
    # Pearson correlation of endpoint degrees; each edge contributes both
    # orientations. NaN when there are no edges or degree variance is zero.
    if not edges:
        return float("nan")
    us = np.array([u for u, v in edges])
    vs = np.array([v for u, v in edges])
    x = np.concatenate([degrees[us], degrees[vs]]).astype(np.float64)
    y = np.concatenate([degrees[vs], degrees[us]]).astype(np.float64)
    sx = x.std()
    sy = y.std()
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def eigenvector_stats(num_nodes: int, edges) -> tuple[float, float, bool, int]:
    """Mean of the L2-normalized dominant eigenvector of the adjacency matrix.

    Power iteration with uniform start, at most POWER_ITER_MAX iterations,
    tolerance POWER_ITER_TOL on both the step delta and the eigen-residual.
    Iterates on A+I rather than A: the shift preserves the dominant
    eigenvector on each component while breaking the +/- oscillation that
    stalls plain power iteration on bipartite graphs.

    Returns (mean, residual, converged, iterations); mean is NaN when the
    iteration does not converge or the graph has no edges.
    """
    if not edges:
        return float("nan"), float("nan"), False, 0
    us = np.array([u for u, v in edges])
    vs = np.array([v for u, v in edges])

    def matvec(x):
        out = np.zeros_like(x)
        np.add.at(out, us, x[vs])
        np.add.at(out, vs, x[us])
        return out

    v = np.full(num_nodes, 1.0 / np.sqrt(num_nodes))
    residual = float("inf")
    for iteration in range(1, POWER_ITER_MAX + 1):
        w = matvec(v) + v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return float("nan"), float("nan"), False, iteration
        v_next = w / norm
        delta = float(np.linalg.norm(v_next - v))
        shifted = matvec(v_next) + v_next
        lam = float(v_next @ shifted)
        residual = float(np.linalg.norm(shifted - lam * v_next))
        v = v_next
        if delta <= POWER_ITER_TOL and residual <= POWER_ITER_TOL:
            return float(v.mean()), residual, True, iteration
    log.warning(
        "power iteration did not converge in %d iterations (residual %.3g); "
        "avg_eigenvector set to NaN",
        POWER_ITER_MAX,
        residual,
    )
    return float("nan"), residual, False, POWER_ITER_MAX


def _feature_diversity(features: np.ndarray, cfg: SamplingConfig) -> float:
    # Mean cosine dissimilarity over node pairs. All pairs when the pair
    # budget covers them, otherwise seeded uniform pairs with replacement.
    n = features.shape[0]
    if n < 2:
        return 0.0
    norms = np.linalg.norm(features, axis=1)
    total_pairs = n * (n - 1) // 2
    if total_pairs <= cfg.pair_samples:
        iu, ju = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng([cfg.seed, 2])
        iu = np.empty(cfg.pair_samples, dtype=np.int64)
        ju = np.empty(cfg.pair_samples, dtype=np.int64)
        filled = 0
        while filled < cfg.pair_samples:
            need = cfg.pair_samples - filled
            a = rng.integers(0, n, size=need)
            b = rng.integers(0, n, size=need)
            keep = a != b
            k = int(keep.sum())
            iu[filled : filled + k] = a[keep]
            ju[filled : filled + k] = b[keep]
            filled += k
    dots = np.einsum("ij,ij->i", features[iu], features[ju])
    denom = norms[iu] * norms[ju]
    both_zero = (norms[iu] == 0.0) & (norms[ju] == 0.0)
    one_zero = (denom == 0.0) & ~both_zero
    sims = np.zeros(len(iu))
    ok = denom > 0.0
    sims[ok] = dots[ok] / denom[ok]
    dis = 1.0 - sims
    dis[both_zero] = 0.0
    dis[one_zero] = 1.0
    return float(dis.mean())


def _label_homophily(edges, labels) -> float:
    if labels is None:
        log.warning("label_homophily is NaN: dataset has no labels")
        return float("nan")
    same = 0
    labeled = 0
    for u, v in edges:
        if labels[u] >= 0 and labels[v] >= 0:
            labeled += 1
            if labels[u] == labels[v]:
                same += 1
    if labeled == 0:
        log.warning("label_homophily is NaN: no edge joins two labeled nodes")
        return float("nan")
    return same / labeled


def _largest_component(graph: nx.Graph):
    comps = list(nx.connected_components(graph))
    # deterministic pick: largest, then the one containing the smallest node id
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps[0]


def compute_properties(dataset: GraphDataset, cfg: SamplingConfig | None = None) -> PropertyVector:
    """Compute all 16 properties of a dataset.

    Parameters
    ----------
    dataset : GraphDataset
        Graph with canonical edges; at least one node.
    cfg : SamplingConfig, optional
        Node/pair sampling controls. Defaults to SamplingConfig().

    Returns
    -------
    PropertyVector
        Values in canonical order; deterministic for a fixed (dataset, cfg).
    """
    cfg = cfg or SamplingConfig()
    dataset.validate()
    n = dataset.num_nodes
    m = dataset.num_edges

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(dataset.edges)
    degrees = np.array([graph.degree(i) for i in range(n)], dtype=np.int64)

    values: dict[str, float] = {}
    values["avg_clustering"] = float(nx.average_clustering(graph)) if n else 0.0
    values["density"] = (2.0 * m) / (n * (n - 1)) if n >= 2 else 0.0
    values["avg_degree_centrality"] = float((degrees / (n - 1)).mean()) if n >= 2 else 0.0
    values["avg_degree"] = float(degrees.mean())
    values["edge_count"] = float(m)
    values["node_count"] = float(n)
    values["feature_dim"] = float(dataset.feature_dim)
    values["connected_components"] = float(nx.number_connected_components(graph))
    values["assortativity"] = _assortativity(dataset.edges, degrees)
    values["avg_eigenvector"] = eigenvector_stats(n, dataset.edges)[0]
    values["feature_diversity"] = _feature_diversity(dataset.features, cfg)
    values["label_homophily"] = _label_homophily(dataset.edges, dataset.labels)

    sample = _sample_nodes(n, cfg)
    sub = graph.subgraph(sample.tolist())
    sub_n = sub.number_of_nodes()
    if sub_n >= 2:
        values["avg_betweenness"] = float(
            np.mean(list(nx.betweenness_centrality(sub, normalized=True).values()))
        )
        values["avg_closeness"] = float(np.mean(list(nx.closeness_centrality(sub).values())))
        lcc_nodes = _largest_component(sub)
        lcc = sub.subgraph(lcc_nodes)
        if lcc.number_of_nodes() >= 2:
            values["graph_diameter"] = float(nx.diameter(lcc))
            values["avg_shortest_path"] = float(nx.average_shortest_path_length(lcc))
        else:
            values["graph_diameter"] = 0.0
            values["avg_shortest_path"] = 0.0
    else:
        values["avg_betweenness"] = 0.0
        values["avg_closeness"] = 0.0
        values["graph_diameter"] = 0.0
        values["avg_shortest_path"] = 0.0

    return PropertyVector(
        dataset=dataset.name,
        values=values,
        seed=cfg.seed,
        sample_size=int(len(sample)),
        computed_at=time.time(),
    )
