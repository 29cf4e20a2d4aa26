"""End-to-end geodesic Gramian denoising.

patches -> neighbour graph -> geodesic distances -> Gramian -> top-L singular
vectors -> projection of the patch coordinates -> Shepard merge -> clamp.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gramian import GramianMatrix, gramian_from_distances
from .imagecore import GrayImage, clamp_to_range
from .lowrank import BACKENDS, BackendOptions, SingularTriplets, dense_svd, exact_symmetric_svd
from .patchgraph import PatchMatrix, extract_patches, geodesic_distances, knn_graph

GEODESIC_ALGORITHMS = ("dijkstra_all", "floyd")


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DenoiseParams:
    delta: int = 10
    rho: int = 5
    rank: int = 20
    backend: str = "exact"
    backend_options: BackendOptions = field(default_factory=BackendOptions)
    geodesic_algorithm: str = "dijkstra_all"
    seed: int = 0

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if self.rho < 3 or self.rho % 2 == 0:
            raise ValueError(f"rho must be an odd integer >= 3, got {self.rho}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {sorted(BACKENDS)}")
        algo = "dijkstra_all" if self.geodesic_algorithm == "dijkstra" else self.geodesic_algorithm
        if algo not in GEODESIC_ALGORITHMS:
            raise ValueError(f"unknown geodesic algorithm {self.geodesic_algorithm!r}")
        object.__setattr__(self, "geodesic_algorithm", algo)

    def options(self) -> BackendOptions:
        """Backend options with the pipeline seed applied."""
        return self.backend_options.with_(seed=self.seed)

    def check_image(self, image: GrayImage) -> None:
        n = image.rows * image.cols
        if self.rank > n:
            raise ValueError(f"rank {self.rank} exceeds the number of pixels {n}")
        if self.delta >= n:
            raise ValueError(f"delta {self.delta} must be below the number of pixels {n}")


@dataclass
class DenoiseResult:
    image: GrayImage
    triplets: SingularTriplets
    timings: dict[str, float]

    @property
    def converged(self) -> bool:
        return self.triplets.converged


def project_patches(patches: PatchMatrix, right_vectors: np.ndarray,
                    keep_mean: bool = True) -> PatchMatrix:
    """Project every patch coordinate (a column of P) onto the singular subspace.

    With ``keep_mean=False`` this is V V^T P.  By default the constant vector
    is added to the subspace, so the projection is onto span{1, v_1..v_L}:
    Gramian singular vectors are orthogonal to 1 and would otherwise strip
    each coordinate's mean.
    """
    p = patches.data
    v = np.asarray(right_vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != p.shape[0]:
        raise ValueError(f"right vectors of shape {v.shape} do not match "
                         f"{p.shape[0]} patches")
    if not keep_mean:
        out = v @ (v.T @ p)
    else:
        mu = p.mean(axis=0)
        centred = p - mu
        w = _centred_basis(v)
        out = w @ (w.T @ centred)
        out += mu
    return PatchMatrix(data=out, rho=patches.rho, rows=patches.rows, cols=patches.cols)


def _centred_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the component of span(v) orthogonal to the constant vector."""
    if v.shape[1] == 0:
        return v
    w = v - v.mean(axis=0)
    q, r = np.linalg.qr(w)
    if np.all(np.abs(np.diag(r)) > 1e-10):
        return q
    # span(v) contains the constant direction; unpivoted QR cannot isolate it
    s, u, _ = dense_svd(w)
    return u[:, s > 1e-10]


def shepard_weight(offsets) -> np.ndarray:
    """Normalised weights exp(-|d|^2) for contributor offsets d (pixel units)."""
    d = np.atleast_2d(np.asarray(offsets, dtype=np.float64))
    w = np.exp(-np.sum(d * d, axis=1))
    return w / w.sum()


def shepard_merge(patches: PatchMatrix, rows: int | None = None, cols: int | None = None) -> GrayImage:
    """Fuse overlapping patch estimates into one image.

    Pixel x_k averages, over every in-bounds centre x_t with
    |x_k - x_t|_inf <= (rho - 1) / 2, the entry of patch t that covers x_k,
    weighted by exp(-|x_k - x_t|^2) and renormalised.
    """
    rows = patches.rows if rows is None else rows
    cols = patches.cols if cols is None else cols
    if patches.n_points != rows * cols:
        raise ValueError(f"{patches.n_points} patches cannot tile a {rows}x{cols} image")
    rho = patches.rho
    h = rho // 2
    num = np.zeros((rows, cols))
    den = np.zeros((rows, cols))
    for a in range(-h, h + 1):
        for b in range(-h, h + 1):
            # pixel (i, j) reads patch (i - a, j - b) at window offset (a, b)
            entry = patches.data[:, (h + a) * rho + (h + b)].reshape(rows, cols)
            w = np.exp(-float(a * a + b * b))
            i0, i1 = max(0, a), min(rows, rows + a)
            j0, j1 = max(0, b), min(cols, cols + b)
            if i0 >= i1 or j0 >= j1:
                continue
            num[i0:i1, j0:j1] += w * entry[i0 - a:i1 - a, j0 - b:j1 - b]
            den[i0:i1, j0:j1] += w
    return GrayImage(num / den)


def build_gramian(image: GrayImage, delta: int, rho: int,
                  geodesic_algorithm: str = "dijkstra_all",
                  timings: dict | None = None) -> tuple[PatchMatrix, GramianMatrix]:
    """Steps from the image to its patch Gramian; stage times land in ``timings``."""
    timings = {} if timings is None else timings
    t = time.perf_counter()
    patches = extract_patches(image, rho)
    timings["patches"] = time.perf_counter() - t
    t = time.perf_counter()
    graph = knn_graph(patches, delta)
    timings["knn"] = time.perf_counter() - t
    t = time.perf_counter()
    dist = geodesic_distances(graph, geodesic_algorithm)
    timings["geodesic"] = time.perf_counter() - t
    t = time.perf_counter()
    gram = gramian_from_distances(dist, check=False)
    del dist
    timings["gramian"] = time.perf_counter() - t
    return patches, gram


def top_triplets(gram: GramianMatrix, rank: int, backend: str, opts: BackendOptions,
                 overwrite: bool = False) -> SingularTriplets:
    if backend == "exact":
        return exact_symmetric_svd(gram.g, rank, opts, overwrite=overwrite)
    return BACKENDS[backend](gram.g, rank, opts)


def reconstruct(patches: PatchMatrix, right_vectors: np.ndarray,
                timings: dict | None = None) -> GrayImage:
    timings = {} if timings is None else timings
    t = time.perf_counter()
    projected = project_patches(patches, right_vectors)
    timings["projection"] = time.perf_counter() - t
    t = time.perf_counter()
    merged = shepard_merge(projected)
    timings["merge"] = time.perf_counter() - t
    return clamp_to_range(merged)


def denoise_detailed(image: GrayImage, params: DenoiseParams) -> DenoiseResult:
    params.check_image(image)
    timings: dict[str, float] = {}
    patches, gram = build_gramian(image, params.delta, params.rho,
                                  params.geodesic_algorithm, timings)
    t = time.perf_counter()
    # the Gramian is private to this call, so the exact solver may overwrite it
    trip = top_triplets(gram, params.rank, params.backend, params.options(), overwrite=True)
    timings["singular_vectors"] = time.perf_counter() - t
    del gram
    if not trip.converged:
        warnings.warn(f"{params.backend} backend did not converge after "
                      f"{trip.iterations} iterations", ConvergenceWarning, stacklevel=2)
    out = reconstruct(patches, trip.right_vectors, timings)
    timings["total"] = sum(timings.values())
    return DenoiseResult(image=out, triplets=trip, timings=timings)


def denoise(image: GrayImage, params: DenoiseParams) -> GrayImage:
    """Denoise ``image``; deterministic for fixed (image, params)."""
    return denoise_detailed(image, params).image
