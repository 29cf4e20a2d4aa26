"""Randomized SVD: Gaussian range finder followed by a small dense SVD."""

from __future__ import annotations

import numpy as np

from .exact import dense_svd
from .types import BackendOptions, as_matrix, check_rank, finish, rng_for

_RANK_DROP = 1e-14


def _range_basis(y: np.ndarray) -> tuple[np.ndarray, int]:
    """Orthonormal basis of range(y) and its numerical rank.

    A rank-deficient sample is reduced to the leading left singular vectors,
    since unpivoted QR does not isolate the dependent columns.
    """
    q, r = np.linalg.qr(y)
    diag = np.abs(np.diag(r))
    scale = np.linalg.norm(y)
    if scale > 0 and np.all(diag >= _RANK_DROP * scale):
        return q, y.shape[1]
    s, u, _ = dense_svd(y)
    rank = int(np.sum(s >= _RANK_DROP * scale)) if scale > 0 else 0
    return u[:, :rank], rank


def rsvd(a, L: int, opts: BackendOptions | None = None):
    """Top-L singular triplets from a randomized range finder."""
    a = as_matrix(a)
    opts = opts or BackendOptions()
    L = check_rank(a, L)
    m, n = a.shape
    k = L + opts.oversampling
    if k > min(m, n):
        raise ValueError(f"L + oversampling = {k} exceeds min(a.shape) = {min(m, n)}")
    rng = rng_for(opts)
    if not np.any(a):
        # every rank-L approximation of the zero matrix is exact
        u, _ = _range_basis(rng.standard_normal((m, L)))
        v, _ = _range_basis(rng.standard_normal((n, L)))
        return finish(np.zeros(L), u, v, iterations=0, converged=True,
                      sample_size=k, effective_rank=0, redraws=0)

    def sample():
        y = a @ rng.standard_normal((n, k))
        for _ in range(opts.power_iterations):
            q, _ = np.linalg.qr(y)
            z, _ = np.linalg.qr(a.T @ q)
            y = a @ z
        return _range_basis(y)

    q, rank = sample()
    redraws = 0
    if rank < k:
        redraws = 1
        q, rank = sample()
    converged = rank == k
    b = q.T @ a
    s, w, v = dense_svd(b)
    u = q @ w
    keep = min(L, len(s))
    s, u, v = s[:keep], u[:, :keep], v[:, :keep]
    return finish(s, u, v, iterations=opts.power_iterations, converged=converged,
                  sample_size=k, effective_rank=rank, redraws=redraws)
