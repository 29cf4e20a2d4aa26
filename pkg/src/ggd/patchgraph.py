"""Patch extraction, delta-nearest-neighbour graph and geodesic distances.

The heavy loops (brute-force neighbour search, all-pairs shortest paths) are
compiled with numba and run sequentially, so results do not depend on thread
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .imagecore import GrayImage


class DisconnectedGraphError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PatchMatrix:
    """``data[k]`` is the row-major rho x rho window centred at pixel k."""

    data: np.ndarray
    rho: int
    rows: int
    cols: int

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected weighted graph in CSR form (both directions stored)."""

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    delta: int

    @property
    def n_vertices(self) -> int:
        return len(self.indptr) - 1

    def neighbors(self, k: int) -> list[tuple[int, float]]:
        lo, hi = self.indptr[k], self.indptr[k + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist()))

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def dense_weights(self) -> np.ndarray:
        """n x n matrix of edge weights, ``inf`` where there is no edge, 0 on the diagonal."""
        n = self.n_vertices
        w = np.full((n, n), np.inf)
        rows = np.repeat(np.arange(n), self.degree())
        w[rows, self.indices] = self.weights
        np.fill_diagonal(w, 0.0)
        return w

    @classmethod
    def from_edges(cls, n: int, src, dst, weight, delta: int = 0) -> "NeighborGraph":
        """Build from undirected edges; duplicate pairs keep their first weight."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        if np.any(weight < 0) or not np.all(np.isfinite(weight)):
            raise ValueError("edge weights must be finite and non-negative")
        keep = src != dst
        s = np.concatenate([src[keep], dst[keep]])
        d = np.concatenate([dst[keep], src[keep]])
        w = np.concatenate([weight[keep], weight[keep]])
        key = s * n + d
        _, first = np.unique(key, return_index=True)
        s, d, w = s[first], d[first], w[first]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(s, minlength=n), out=indptr[1:])
        return cls(indptr=indptr, indices=d, weights=w, delta=delta)


@dataclass(frozen=True, eq=False)
class GeodesicMatrix:
    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]


def extract_patches(image: GrayImage, rho: int) -> PatchMatrix:
    """One vectorised rho x rho window per pixel, mirror-reflected at the border.

    Reflection does not repeat the edge pixel (``numpy.pad`` mode ``reflect``).
    """
    rho = int(rho)
    if rho % 2 == 0:
        raise ValueError(f"patch size rho must be odd, got {rho}")
    if rho < 3 or rho > min(image.rows, image.cols):
        raise ValueError(f"patch size rho={rho} must satisfy 3 <= rho <= "
                         f"min(rows, cols) = {min(image.rows, image.cols)}")
    h = rho // 2
    padded = np.pad(image.pixels, h, mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (rho, rho))
    data = np.ascontiguousarray(windows.reshape(image.rows * image.cols, rho * rho))
    return PatchMatrix(data=data, rho=rho, rows=image.rows, cols=image.cols)


@numba.njit(cache=True)
def _knn_kernel(x, delta):
    n, dim = x.shape
    nbr = np.empty((n, delta), dtype=np.int64)
    dist2 = np.empty((n, delta), dtype=np.float64)
    best_d = np.empty(delta, dtype=np.float64)
    best_j = np.empty(delta, dtype=np.int64)
    for i in range(n):
        count = 0
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for t in range(dim):
                diff = x[i, t] - x[j, t]
                s += diff * diff
            if count < delta:
                pos = count
                count += 1
            elif s < best_d[delta - 1]:
                pos = delta - 1
            else:
                continue
            # strict comparison keeps earlier (lower) indices ahead on ties
            while pos > 0 and best_d[pos - 1] > s:
                best_d[pos] = best_d[pos - 1]
                best_j[pos] = best_j[pos - 1]
                pos -= 1
            best_d[pos] = s
            best_j[pos] = j
        nbr[i, :] = best_j
        dist2[i, :] = best_d
    return nbr, dist2


def knn_lists(patches: PatchMatrix | np.ndarray, delta: int) -> tuple[np.ndarray, np.ndarray]:
    """Directed delta-nearest-neighbour lists: (indices, Euclidean distances)."""
    x = patches.data if isinstance(patches, PatchMatrix) else np.asarray(patches, dtype=np.float64)
    n = x.shape[0]
    delta = int(delta)
    if not 1 <= delta < n:
        raise ValueError(f"delta must satisfy 1 <= delta < {n}, got {delta}")
    nbr, dist2 = _knn_kernel(np.ascontiguousarray(x, dtype=np.float64), delta)
    return nbr, np.sqrt(dist2)


def knn_graph(patches: PatchMatrix | np.ndarray, delta: int) -> NeighborGraph:
    """Join every point to its delta nearest others, then symmetrise by union."""
    nbr, dist = knn_lists(patches, delta)
    n = nbr.shape[0]
    src = np.repeat(np.arange(n, dtype=np.int64), delta)
    return NeighborGraph.from_edges(n, src, nbr.ravel(), dist.ravel(), delta=int(delta))


@numba.njit(cache=True)
def _components(indptr, indices):
    n = len(indptr) - 1
    label = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    ncomp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = ncomp
        stack[0] = s
        top = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if label[v] < 0:
                    label[v] = ncomp
                    stack[top] = v
                    top += 1
        ncomp += 1
    return label


@numba.njit(cache=True)
def _dijkstra_all(indptr, indices, weights):
    n = len(indptr) - 1
    out = np.empty((n, n), dtype=np.float64)
    m = len(indices)
    heap_d = np.empty(m + 1, dtype=np.float64)
    heap_v = np.empty(m + 1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    for s in range(n):
        dist = out[s]
        for v in range(n):
            dist[v] = np.inf
            done[v] = False
        dist[s] = 0.0
        heap_d[0] = 0.0
        heap_v[0] = s
        size = 1
        while size > 0:
            d = heap_d[0]
            u = heap_v[0]
            # pop: move last element to the root and sift down
            size -= 1
            if size > 0:
                ld = heap_d[size]
                lv = heap_v[size]
                i = 0
                while True:
                    c = 2 * i + 1
                    if c >= size:
                        break
                    if c + 1 < size and heap_d[c + 1] < heap_d[c]:
                        c += 1
                    if heap_d[c] < ld:
                        heap_d[i] = heap_d[c]
                        heap_v[i] = heap_v[c]
                        i = c
                    else:
                        break
                heap_d[i] = ld
                heap_v[i] = lv
            if done[u]:
                continue
            done[u] = True
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    # push and sift up
                    i = size
                    size += 1
                    while i > 0:
                        p = (i - 1) // 2
                        if heap_d[p] > nd:
                            heap_d[i] = heap_d[p]
                            heap_v[i] = heap_v[p]
                            i = p
                        else:
                            break
                    heap_d[i] = nd
                    heap_v[i] = v
    return out


@numba.njit(cache=True)
def _floyd_inplace(d):
    n = d.shape[0]
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                t = dik + d[k, j]
                if t < d[i, j]:
                    d[i, j] = t
    return d


@numba.njit(cache=True)
def _symmetrize_min(d):
    n = d.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            m = min(d[i, j], d[j, i])
            d[i, j] = m
            d[j, i] = m
    return d


def check_connected(graph: NeighborGraph) -> None:
    label = _components(graph.indptr, graph.indices)
    if label.max(initial=0) > 0:
        j = int(np.argmax(label != label[0]))
        raise DisconnectedGraphError(
            f"neighbour graph is disconnected ({label.max() + 1} components): "
            f"vertices 0 and {j} are mutually unreachable "
            f"(delta={graph.delta}); increase delta")


def geodesic_distances(graph: NeighborGraph, algorithm: str = "dijkstra_all") -> GeodesicMatrix:
    """All-pairs shortest-path lengths of a connected neighbour graph.

    ``floyd`` relaxes the dense weight matrix; ``dijkstra_all`` runs a
    binary-heap Dijkstra from every vertex on the sparse graph.
    """
    if algorithm in ("dijkstra", "dijkstra_all"):
        check_connected(graph)
        # the two directions sum one path in opposite orders; keep the smaller
        d = _symmetrize_min(_dijkstra_all(graph.indptr, graph.indices, graph.weights))
    elif algorithm == "floyd":
        check_connected(graph)
        d = _floyd_inplace(graph.dense_weights())
    else:
        raise ValueError(f"unknown geodesic algorithm {algorithm!r}")
    return GeodesicMatrix(d=d)
