"""Deterministic synthetic fixtures.

Everything here is constructed, seeded, and offline: benchmark banks with
planted structure (a property whose distance ranking matches empirical
transferability exactly, a hit-rate bank with a known retrieval outcome, a
search space with a planted optimum), plus small random graph datasets.
They power the demos and the test suite; none of it ships real benchmark data.
"""

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph_data import DatasetMeta, GraphDataset, canonicalize
from .knowledge_base import BenchmarkTable, write_bench_csv
from .properties import PROPERTY_NAMES, PropertyVector, save_properties
from .search_space import Architecture, format_key
from .seeding import fold_seed

# Loosely plausible value ranges per property, used to synthesize vectors.
PLAUSIBLE_RANGES: dict[str, tuple[float, float]] = {
    "avg_clustering": (0.0, 0.6),
    "avg_betweenness": (0.0, 0.05),
    "density": (0.0005, 0.2),
    "avg_degree_centrality": (0.001, 0.2),
    "avg_closeness": (0.05, 0.5),
    "avg_degree": (1.0, 50.0),
    "edge_count": (500.0, 250000.0),
    "graph_diameter": (2.0, 30.0),
    "avg_shortest_path": (1.5, 10.0),
    "assortativity": (-0.3, 0.3),
    "avg_eigenvector": (0.001, 0.1),
    "feature_dim": (8.0, 2000.0),
    "node_count": (200.0, 50000.0),
    "feature_diversity": (0.1, 0.99),
    "connected_components": (1.0, 50.0),
    "label_homophily": (0.2, 0.95),
}


def affine_property_vector(name: str, t: float) -> PropertyVector:
    """All 16 properties linear in one latent coordinate t (typically [0,1]).

    Every property then induces the same normalized distance ordering, which
    reduces property-based similarity to plain matching on t.
    """
    values = {}
    for prop in PROPERTY_NAMES:
        lo, hi = PLAUSIBLE_RANGES[prop]
        values[prop] = lo + (hi - lo) * t
    return PropertyVector(dataset=name, values=values, seed=0, sample_size=0)


def random_property_vector(name: str, seed: int) -> PropertyVector:
    rng = np.random.default_rng(seed)
    values = {}
    for prop in PROPERTY_NAMES:
        lo, hi = PLAUSIBLE_RANGES[prop]
        values[prop] = float(lo + (hi - lo) * rng.random())
    return PropertyVector(dataset=name, values=values, seed=0, sample_size=0)


def product_space(macros, slot_tags) -> list[Architecture]:
    """Every architecture with macro in ``macros`` and ops[i] in slot_tags[i].

    Crossover of two members stays inside the set (the macro comes whole from
    a parent, each op slot from a parent), so a bank recording exactly this
    set supports full refinement runs under a lookup evaluator.
    """
    out = []
    for macro in macros:
        stack = [()]
        for tags in slot_tags:
            stack = [ops + (t,) for ops in stack for t in tags]
        out.extend(Architecture(tuple(macro), ops) for ops in stack)
    return out


@dataclass
class SynthBank:
    table: BenchmarkTable
    planted_index: int
    planted_name: str
    latent: dict[str, float]
    top_archs: dict[str, str]
    archs: list[Architecture]
    block_size: int

    def expected_transfer(self, anchor: str) -> dict[str, float]:
        """Closed-form transfer score of each source onto ``anchor``."""
        return {
            name: 0.95 - 0.006 * abs(self.latent[anchor] - self.latent[name])
            for name in self.latent
            if name != anchor
        }


def make_synth_bank() -> SynthBank:
    """Five datasets x two hundred architectures with one planted property.

    The architecture list is cut into five consecutive 40-arch blocks, one
    per dataset. On any dataset column, all of block j's records sit at level
    0.95 - 0.006*|latent gap(anchor, j)| (the owner block at 0.95), minus a
    tiny within-block slope that keeps every value distinct. Because blocks
    never interleave, a source's top-n_m list stays inside its own block for
    n_m <= 40, and looking that list up on any anchor returns exactly the
    block's level there: each source's transfer score onto each anchor is
    0.95 - 0.006*|latent gap|, strictly decreasing in the gap.

    The latent coordinates [1, 2, 4, 8, 16] have all-distinct pairwise gaps
    and ``density`` is an affine image of the latent, so the density-distance
    ranking reproduces the empirical transfer ranking exactly for every
    anchor: its confidence averages 1.0. Remaining properties are random.
    """
    names = ["d1", "d2", "d3", "d4", "d5"]
    latent = dict(zip(names, [1.0, 2.0, 4.0, 8.0, 16.0]))
    archs = product_space(
        macros=[(0, 0, 1, 3), (0, 1, 2, 3)],
        slot_tags=[
            ("arma", "gat", "gcn", "gin", "sage"),
            ("cheb", "fc", "graph", "sage", "skip"),
            ("gcn", "sage"),
            ("gat", "gin"),
        ],
    )
    assert len(archs) == 200
    block_size = 40

    table = BenchmarkTable()
    planted_name = "density"
    planted_index = PROPERTY_NAMES.index(planted_name)
    for name in names:
        vector = random_property_vector(name, fold_seed("synth-bank-props", name))
        vector.values[planted_name] = latent[name] / 20.0
        table.add_dataset(
            DatasetMeta(name=name, num_nodes=int(vector.values["node_count"]),
                        num_edges=int(vector.values["edge_count"]),
                        feature_dim=int(vector.values["feature_dim"]),
                        num_classes=5, metric="accuracy"),
            properties=vector,
        )

    for anchor in names:
        for j, arch in enumerate(archs):
            owner = names[j // block_size]
            level = 0.95 if owner == anchor else 0.95 - 0.006 * abs(latent[anchor] - latent[owner])
            # within-block slope 1e-5 << 0.006 * (min latent gap difference),
            # so blocks stay strictly ordered on every column
            valid = level - 1e-5 * (j % block_size)
            table.add_record(anchor, arch, valid, valid - 0.01)
    top_archs = {name: format_key(archs[i * block_size]) for i, name in enumerate(names)}
    return SynthBank(
        table=table,
        planted_index=planted_index,
        planted_name=planted_name,
        latent=latent,
        top_archs=top_archs,
        archs=archs,
        block_size=block_size,
    )


def write_bank(table: BenchmarkTable, out_dir) -> Path:
    """Materialize a bank as bench.csv plus properties/<dataset>.json."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    write_bench_csv(table, root / "bench.csv")
    props_dir = root / "properties"
    props_dir.mkdir(exist_ok=True)
    for name, vector in table.property_vectors.items():
        save_properties(vector, props_dir / f"{name}.json")
    return root


@dataclass
class HitBank:
    table: BenchmarkTable
    coords: dict[str, float]
    expected_rate_at_1: float
    unperturbed: list[str]
    expected_best: dict[str, str]


def make_hit_bank(perturbed: bool = True) -> HitBank:
    """Eight anchors where top-1 retrieval is right for exactly 3 of 8.

    Coordinates form a Sidon-like set (all pairwise gaps distinct) and every
    property is affine in the coordinate, so similarity reduces to coordinate
    distance. The architecture list is cut into eight 40-arch blocks, one per
    dataset; block j's level on an anchor is 0.95 - 0.002*gap, so transfer
    scores decrease with coordinate distance, as in the synthetic bank.

    With ``perturbed`` (the default), five anchors get their farthest
    source's block raised on their own column to 0.95 - 0.001*nearest_gap:
    above every cross level yet still below the anchor's own block, so each
    source's top-n_m list never changes and only the five anchors' empirical
    rankings flip. Top-1 retrieval then hits only for the three unperturbed
    anchors (rate 3/8), and because the boosted source is the farthest, the
    rate holds at 3/8 through n_s = 6 and reaches 1.0 at n_s = 7.
    With ``perturbed=False`` retrieval is right for every anchor at any n_s.
    """
    xs = [0.0, 1.0, 3.0, 7.0, 12.0, 20.0, 30.0, 45.0]
    names = [f"h{i}" for i in range(8)]
    coords = dict(zip(names, xs))
    unperturbed = ["h0", "h1", "h2"]

    archs = product_space(
        macros=[(0, 0, 0, 1), (0, 1, 1, 2)],
        slot_tags=[
            ("gat", "gcn"),
            ("arma", "cheb", "fc", "gin", "sage"),
            ("gcn", "gin", "graph", "skip"),
            ("fc", "gat", "sage", "skip"),
        ],
    )
    assert len(archs) == 320
    block_size = 40

    table = BenchmarkTable()
    for name in names:
        vector = affine_property_vector(name, coords[name] / 45.0)
        table.add_dataset(DatasetMeta(name=name, num_classes=4), properties=vector)

    expected_best = {}
    for anchor in names:
        others = [n for n in names if n != anchor]
        near = min(others, key=lambda n: (abs(coords[n] - coords[anchor]), n))
        far = max(others, key=lambda n: (abs(coords[n] - coords[anchor]), n))
        boosted = perturbed and anchor not in unperturbed
        expected_best[anchor] = far if boosted else near
        levels = {
            owner: 0.95 if owner == anchor else 0.95 - 0.002 * abs(coords[anchor] - coords[owner])
            for owner in names
        }
        if boosted:
            # beats every cross level, still under the anchor's own 0.95
            levels[far] = 0.95 - 0.001 * abs(coords[near] - coords[anchor])
        for j, arch in enumerate(archs):
            valid = levels[names[j // block_size]] - 1e-5 * (j % block_size)
            table.add_record(anchor, arch, valid, valid - 0.01)
    return HitBank(
        table=table,
        coords=coords,
        expected_rate_at_1=3 / 8 if perturbed else 1.0,
        unperturbed=unperturbed,
        expected_best=expected_best,
    )


@dataclass
class PlantedSpace:
    table: BenchmarkTable
    space: list[Architecture]
    optimum: Architecture
    unseen: str
    sources: list[str]


def make_planted_space(seed: int = 0) -> PlantedSpace:
    """A 200-architecture space whose lookup performance is unimodal in the
    coordinate (Hamming) distance to a planted optimum.

    The unseen dataset's optimum is the plant; each source dataset's optimum
    sits one gene away, so knowledge-guided search starts in the right
    neighborhood but still has to refine. A small per-architecture jitter,
    shared across datasets, keeps orderings strict and informative.
    """
    space = product_space(
        macros=[(0, 0, 1, 3), (0, 1, 2, 3)],
        slot_tags=[
            ("gat", "gcn"),
            ("arma", "cheb", "gcn", "gin", "sage"),
            ("fc", "gat", "gin", "graph", "skip"),
            ("gcn", "sage"),
        ],
    )
    assert len(space) == 200
    optimum = Architecture((0, 1, 2, 3), ("gcn", "gin", "skip", "sage"))
    assert optimum in space

    def swap_op(arch: Architecture, slot: int, tag: str) -> Architecture:
        ops = list(arch.ops)
        ops[slot] = tag
        return Architecture(arch.macro, tuple(ops))

    optima = {
        "u0": optimum,
        "s1": swap_op(optimum, 1, "arma"),
        "s2": swap_op(optimum, 2, "graph"),
        "s3": Architecture((0, 0, 1, 3), optimum.ops),
    }
    coords = {"u0": 0.30, "s1": 0.32, "s2": 0.36, "s3": 0.42}

    rng = np.random.default_rng(fold_seed("planted-space-jitter", seed))
    jitter = {format_key(a): float(rng.random()) for a in space}

    def dist(a: Architecture, b: Architecture) -> int:
        d = int(a.macro != b.macro)
        return d + sum(1 for i in range(4) if a.ops[i] != b.ops[i])

    table = BenchmarkTable()
    for name, t in coords.items():
        table.add_dataset(
            DatasetMeta(name=name, num_classes=3), properties=affine_property_vector(name, t)
        )
    for name in coords:
        for arch in space:
            valid = 0.92 - 0.10 * dist(arch, optima[name]) + 0.005 * jitter[format_key(arch)]
            table.add_record(name, arch, valid, max(0.0, valid - 0.01))
    return PlantedSpace(
        table=table, space=space, optimum=optimum, unseen="u0", sources=["s1", "s2", "s3"]
    )


def make_random_dataset(
    name: str,
    num_nodes: int = 60,
    feature_dim: int = 8,
    num_classes: int = 3,
    avg_degree: float = 4.0,
    homophily: float = 0.7,
    seed: int = 0,
) -> GraphDataset:
    """A small labeled random graph with class-clustered features.

    Edges prefer same-class endpoints with probability ``homophily``;
    features are class means plus noise. Deterministic in ``seed``.
    """
    rng = random.Random(fold_seed("random-dataset", name, seed))
    nprng = np.random.default_rng(fold_seed("random-dataset-np", name, seed))
    labels = np.array([rng.randrange(num_classes) for _ in range(num_nodes)], dtype=np.int64)
    by_class = {c: [i for i in range(num_nodes) if labels[i] == c] for c in range(num_classes)}

    target_edges = int(num_nodes * avg_degree / 2)
    edges = set()
    guard = 0
    while len(edges) < target_edges and guard < target_edges * 50:
        guard += 1
        u = rng.randrange(num_nodes)
        if rng.random() < homophily and len(by_class[int(labels[u])]) > 1:
            v = rng.choice(by_class[int(labels[u])])
        else:
            v = rng.randrange(num_nodes)
        if u == v:
            continue
        edges.add((min(u, v), max(u, v)))
    means = nprng.normal(0.0, 1.0, size=(num_classes, feature_dim))
    features = means[labels] + 0.3 * nprng.normal(0.0, 1.0, size=(num_nodes, feature_dim))

    order = list(range(num_nodes))
    rng.shuffle(order)
    cut1, cut2 = int(num_nodes * 0.6), int(num_nodes * 0.8)
    splits = {
        "train": sorted(order[:cut1]),
        "val": sorted(order[cut1:cut2]),
        "test": sorted(order[cut2:]),
    }

    dataset = GraphDataset(
        name=name,
        num_nodes=num_nodes,
        edges=canonicalize(edges, num_nodes),
        features=features,
        num_classes=num_classes,
        labels=labels,
        metric="accuracy",
        splits=splits,
    )
    return dataset.validate()
