import json
import math

import numpy as np
import pytest

from gnarch.errors import DataError
from gnarch.properties import (
    PROPERTY_NAMES,
    SAMPLED_PROPERTIES,
    PropertyVector,
    SamplingConfig,
    compute_properties,
    eigenvector_stats,
    load_properties,
    property_lines,
    save_properties,
)

from conftest import make_graph, random_graph
from oracles import oracle_eigenvector_mean, oracle_properties


def test_canonical_order_is_frozen():
    assert PROPERTY_NAMES == (
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
    assert SAMPLED_PROPERTIES == {
        "avg_betweenness",
        "avg_closeness",
        "graph_diameter",
        "avg_shortest_path",
    }


def test_triangle_analytics(triangle):
    v = compute_properties(triangle).values
    assert v["avg_clustering"] == 1.0
    assert v["density"] == 1.0
    assert v["avg_degree"] == 2.0
    assert v["avg_degree_centrality"] == 1.0
    assert v["avg_betweenness"] == 0.0
    assert v["avg_closeness"] == 1.0
    assert v["graph_diameter"] == 1.0
    assert v["avg_shortest_path"] == 1.0
    assert v["edge_count"] == 3.0
    assert v["node_count"] == 3.0
    assert v["connected_components"] == 1.0
    # K3 eigenvector is uniform: each entry 1/sqrt(3)
    assert v["avg_eigenvector"] == pytest.approx(1 / math.sqrt(3), rel=1e-8)
    # labels 0,0,1: edges (0,1) same, (0,2) and (1,2) differ
    assert v["label_homophily"] == pytest.approx(1 / 3)
    # all degrees equal: zero variance
    assert math.isnan(v["assortativity"])


def test_path4_analytics(path4):
    v = compute_properties(path4).values
    assert v["avg_clustering"] == 0.0
    assert v["graph_diameter"] == 3.0
    assert v["avg_shortest_path"] == pytest.approx(10 / 6)
    # ends contribute 0, middles 2 raw pairs * 2/((n-1)(n-2)) = 2/3 each
    assert v["avg_betweenness"] == pytest.approx(1 / 3)
    assert v["avg_closeness"] == pytest.approx((0.5 + 0.75 + 0.75 + 0.5) / 4)
    assert v["assortativity"] == pytest.approx(-0.5, rel=1e-9)
    assert v["label_homophily"] == pytest.approx(2 / 3)


def test_star_homophily_zero(star5):
    v = compute_properties(star5).values
    assert v["label_homophily"] == 0.0
    assert v["avg_degree"] == pytest.approx(8 / 5)
    # center betweenness: all 6 leaf pairs, scale 2/(4*3); leaves 0
    assert v["avg_betweenness"] == pytest.approx(6 * 2 / 12 / 5)


def test_disconnected_graph(two_triangles):
    v = compute_properties(two_triangles).values
    assert v["connected_components"] == 2.0
    # diameter and path length are measured on the largest component
    assert v["graph_diameter"] == 1.0
    assert v["avg_shortest_path"] == 1.0
    assert v["label_homophily"] == 1.0


def test_eigenvector_on_bipartite_path():
    # P2 is bipartite; the shifted iteration must still converge
    mean, residual, converged, _ = eigenvector_stats(2, [(0, 1)])
    assert converged
    assert mean == pytest.approx(1 / math.sqrt(2), rel=1e-8)
    assert residual <= 1e-8


def test_eigenvector_no_edges():
    mean, _, converged, _ = eigenvector_stats(3, [])
    assert math.isnan(mean)
    assert not converged


def test_eigenvector_matches_dense_decomposition():
    for seed in range(10):
        g = random_graph(seed)
        mean, _, converged, _ = eigenvector_stats(g.num_nodes, g.edges)
        assert converged, f"seed {seed} did not converge"
        expected = oracle_eigenvector_mean(g.num_nodes, g.edges)
        assert mean == pytest.approx(expected, rel=1e-6)


def test_all_properties_match_oracle_on_random_graphs():
    for seed in range(8):
        g = random_graph(seed)
        got = compute_properties(g).values
        want = oracle_properties(
            g.num_nodes, g.edges, g.features.tolist(),
            None if g.labels is None else g.labels.tolist(),
        )
        for name in PROPERTY_NAMES:
            if math.isnan(want[name]):
                assert math.isnan(got[name]), name
                continue
            rel = 1e-6 if name in ("assortativity", "avg_eigenvector") else 1e-9
            assert got[name] == pytest.approx(want[name], rel=rel, abs=1e-12), (
                f"{name} mismatch on seed {seed}"
            )


def test_feature_diversity_zero_vector_conventions():
    feats = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    g = make_graph("fd", 4, [(0, 1)], features=feats)
    v = compute_properties(g).values
    # pairs: (0,1) both zero -> 0; (0,2),(0,3),(1,2),(1,3) one zero -> 1;
    # (2,3) identical -> 0. Mean = 4/6.
    assert v["feature_diversity"] == pytest.approx(4 / 6)


def test_sampling_cap_and_determinism():
    g = random_graph(3)
    cfg = SamplingConfig(max_nodes=7, seed=11)
    a = compute_properties(g, cfg)
    b = compute_properties(g, cfg)
    assert a.values == pytest.approx(b.values, nan_ok=True)
    assert a.sample_size == 7
    # unsampled properties are unaffected by the cap
    full = compute_properties(g).values
    for name in PROPERTY_NAMES:
        if name not in SAMPLED_PROPERTIES:
            if math.isnan(full[name]):
                assert math.isnan(a.values[name])
            else:
                assert a.values[name] == full[name]


def test_property_vector_requires_all_names():
    with pytest.raises(DataError):
        PropertyVector(dataset="x", values={"density": 1.0})


def test_json_round_trip_with_nan(tmp_path, triangle):
    vec = compute_properties(triangle)
    path = tmp_path / "t.json"
    save_properties(vec, path)
    raw = json.loads(path.read_text())
    assert raw["values"]["assortativity"] == "NaN"
    loaded = load_properties(path)
    assert math.isnan(loaded.values["assortativity"])
    for name in PROPERTY_NAMES:
        if not math.isnan(vec.values[name]):
            assert loaded.values[name] == vec.values[name]


def test_property_lines_format(triangle):
    text = property_lines(compute_properties(triangle).values)
    lines = text.splitlines()
    assert len(lines) == 16
    assert lines[0] == "avg_clustering: 1"
    assert "assortativity: NaN" in lines
