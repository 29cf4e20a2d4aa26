import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ggd.imagecore import GrayImage
from ggd.patchgraph import (DisconnectedGraphError, NeighborGraph, extract_patches,
                            geodesic_distances, knn_graph, knn_lists)


def bellman_ford(n, edges):
    """Reference all-pairs shortest paths, one plain relaxation loop per source."""
    out = np.full((n, n), np.inf)
    for s in range(n):
        d = out[s]
        d[s] = 0.0
        for _ in range(n - 1):
            changed = False
            for u, v, w in edges:
                for a, b in ((u, v), (v, u)):
                    if d[a] + w < d[b]:
                        d[b] = d[a] + w
                        changed = True
            if not changed:
                break
    return out


def random_connected(rng, n, extra, dyadic=False):
    """Random spanning tree plus ``extra`` random edges."""
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        edges[tuple(sorted((order[i], order[rng.integers(i)])))] = None
    while len(edges) < n - 1 + extra:
        u, v = rng.choice(n, 2, replace=False)
        edges[tuple(sorted((u, v)))] = None
    if dyadic:
        w = rng.integers(1, 1024, len(edges)) / 64.0
    else:
        w = rng.uniform(0.01, 10.0, len(edges))
    return [(int(u), int(v), float(x)) for (u, v), x in zip(edges, w)]


def graph_of(n, edges):
    src = np.array([e[0] for e in edges])
    dst = np.array([e[1] for e in edges])
    w = np.array([e[2] for e in edges])
    return NeighborGraph.from_edges(n, src, dst, w)


def test_center_patch_is_whole_image():
    img = GrayImage(np.arange(1.0, 10.0).reshape(3, 3))
    p = extract_patches(img, 3)
    assert p.data.shape == (9, 9)
    assert p.data[4].tolist() == list(range(1, 10))


def test_corner_patch_mirror_reflection():
    img = GrayImage(np.arange(1.0, 10.0).reshape(3, 3))
    p = extract_patches(img, 3)
    assert p.data[0].reshape(3, 3).tolist() == [[5, 4, 5], [2, 1, 2], [5, 4, 5]]


def test_constant_image_patches_identical():
    p = extract_patches(GrayImage(np.full((6, 5), 7.0)), 5)
    assert np.all(p.data == 7.0)
    assert p.n_points == 30 and p.dim == 25


def test_patch_rows_follow_pixel_order(rng):
    img = GrayImage(rng.uniform(0, 255, (7, 9)))
    p = extract_patches(img, 3)
    for k in range(63):
        i, j = divmod(k, 9)
        assert p.data[k, 4] == img.pixels[i, j]


@pytest.mark.parametrize("rho", [2, 1, 9])
def test_patch_size_errors(rho):
    with pytest.raises(ValueError):
        extract_patches(GrayImage(np.zeros((5, 5))), rho)


def test_knn_collinear_example():
    pts = np.array([[0.0], [1.0], [2.0]])
    g = knn_graph(pts, 1)
    # point 1 is equidistant from 0 and 2 and keeps the lower index
    assert g.neighbors(0) == [(1, 1.0)]
    assert sorted(g.neighbors(1)) == [(0, 1.0), (2, 1.0)]
    assert g.neighbors(2) == [(1, 1.0)]


def test_knn_tie_breaks_by_lower_index():
    nbr, _ = knn_lists(np.array([[0.0], [1.0], [-1.0], [1.0]]), 2)
    assert nbr[0].tolist() == [1, 2]


def test_knn_saturated_is_complete(rng):
    x = rng.standard_normal((8, 3))
    w = knn_graph(x, 7).dense_weights()
    direct = np.linalg.norm(x[:, None] - x[None], axis=2)
    off = ~np.eye(8, dtype=bool)
    assert np.allclose(w[off], direct[off], rtol=1e-12)


def test_knn_duplicates_zero_weight():
    g = knn_graph(np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]]), 1)
    assert (1, 0.0) in g.neighbors(0)


def test_knn_delta_range():
    with pytest.raises(ValueError):
        knn_graph(np.zeros((4, 1)), 4)
    with pytest.raises(ValueError):
        knn_graph(np.zeros((4, 1)), 0)


def test_knn_union_degree_and_symmetry(rng):
    x = rng.standard_normal((40, 4))
    g = knn_graph(x, 5)
    assert np.all(g.degree() >= 5)
    w = g.dense_weights()
    assert np.array_equal(np.isfinite(w), np.isfinite(w.T))
    nbr, dist = knn_lists(x, 5)
    for i in range(40):
        d_all = np.linalg.norm(x - x[i], axis=1)
        d_all[i] = np.inf
        expect = np.argsort(d_all, kind="stable")[:5]
        assert nbr[i].tolist() == expect.tolist()
        assert np.allclose(dist[i], d_all[expect], rtol=1e-12)


def test_knn_permutation_invariance(rng):
    x = rng.standard_normal((25, 3))
    perm = rng.permutation(25)
    a = knn_graph(x, 4).dense_weights()
    b = knn_graph(x[perm], 4).dense_weights()
    assert np.allclose(b, a[np.ix_(perm, perm)], rtol=1e-12, equal_nan=True)


@pytest.mark.parametrize("algo", ["floyd", "dijkstra_all"])
def test_triangle_example(algo):
    g = graph_of(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)])
    d = geodesic_distances(g, algo).d
    assert d[0, 2] == 2.0 and d[2, 0] == 2.0


@pytest.mark.parametrize("algo", ["floyd", "dijkstra_all"])
def test_metric_complete_graph_keeps_direct_weights(algo, rng):
    x = rng.standard_normal((10, 2))
    g = knn_graph(x, 9)
    d = geodesic_distances(g, algo).d
    direct = np.linalg.norm(x[:, None] - x[None], axis=2)
    assert np.allclose(d, direct, rtol=1e-12, atol=1e-14)


def test_floyd_equals_dijkstra_on_30_vertices(rng):
    edges = random_connected(rng, 30, 40, dyadic=True)
    g = graph_of(30, edges)
    assert np.array_equal(geodesic_distances(g, "floyd").d, geodesic_distances(g, "dijkstra_all").d)


def test_against_bellman_ford(rng):
    for _ in range(5):
        edges = random_connected(rng, 20, 25)
        ref = bellman_ford(20, edges)
        g = graph_of(20, edges)
        for algo in ("floyd", "dijkstra_all"):
            assert np.allclose(geodesic_distances(g, algo).d, ref, rtol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_geodesic_matrix_invariants(seed):
    rng = np.random.default_rng(seed)
    edges = random_connected(rng, 15, 10)
    d = geodesic_distances(graph_of(15, edges), "dijkstra_all").d
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0) and np.all(np.isfinite(d))
    for i, j, k in itertools.islice(itertools.product(range(15), repeat=3), 0, None, 7):
        assert d[i, k] <= d[i, j] + d[j, k] + 1e-12
    for u, v, w in edges:
        assert d[u, v] <= w


@pytest.mark.parametrize("algo", ["floyd", "dijkstra_all", "dijkstra"])
def test_disconnected_graph_error(algo):
    g = graph_of(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(DisconnectedGraphError, match="increase delta"):
        geodesic_distances(g, algo)


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        geodesic_distances(graph_of(2, [(0, 1, 1.0)]), "bfs")
