"""Monte Carlo low-rank approximation by repeated column sampling.

The rank-L approximation B = sum_l x_l (A^T x_l)^T is never formed; only its
Frobenius norm ||A^T X||_F is tracked.
"""

from __future__ import annotations

import numpy as np

from .exact import symmetric_eigen
from .types import BackendError, BackendOptions, as_matrix, check_rank, finish, rng_for

DEFAULT_TOLERANCE = 1e-4
DEFAULT_MAX_ITERATIONS = 200
_REDRAWS = 10


def modified_gram_schmidt(columns: np.ndarray, basis: np.ndarray | None = None,
                          drop: float = 1e-10) -> np.ndarray:
    """Orthonormalise ``columns`` against ``basis`` and each other.

    Columns whose remaining norm falls below ``drop`` times their original
    norm are discarded, so the result may have fewer columns.
    """
    m = columns.shape[0]
    q = np.empty((m, 0)) if basis is None else basis
    out = [q[:, i] for i in range(q.shape[1])]
    for j in range(columns.shape[1]):
        c = columns[:, j].astype(np.float64, copy=True)
        norm0 = np.linalg.norm(c)
        if norm0 == 0.0:
            continue
        # two passes of MGS keep the basis orthonormal to rounding
        for _ in range(2):
            for w in out:
                c -= (w @ c) * w
        nrm = np.linalg.norm(c)
        if nrm > drop * norm0:
            out.append(c / nrm)
    if not out:
        return np.empty((m, 0))
    return np.stack(out, axis=1)


def _frob(at_x: np.ndarray) -> float:
    return float(np.sqrt(np.sum(at_x * at_x)))


def mcla(a, L: int, opts: BackendOptions | None = None, monitor=None):
    """Top-L singular triplets by Monte Carlo column sampling.

    ``monitor(t, norm)`` is called with ||B^(t)||_F after every iteration.
    """
    a = as_matrix(a)
    opts = opts or BackendOptions()
    L = check_rank(a, L)
    m, n = a.shape
    eta = opts.tolerance if opts.tolerance is not None else DEFAULT_TOLERANCE
    max_it = opts.max_iterations or DEFAULT_MAX_ITERATIONS
    batch = min(opts.mcla_batch or L, n)
    rng = rng_for(opts)

    if not np.any(a):
        # every rank-L approximation of the zero matrix is exact
        basis = modified_gram_schmidt(rng.standard_normal((m, L)))
        right = modified_gram_schmidt(rng.standard_normal((n, L)))
        return finish(np.zeros(L), basis, right, iterations=0, converged=True,
                      frobenius=0.0, tolerance=eta)

    for _ in range(_REDRAWS):
        cols = np.sort(rng.choice(n, size=L, replace=False))
        x = modified_gram_schmidt(a[:, cols])
        if x.shape[1] == L:
            break
    else:
        raise BackendError(f"could not draw {L} linearly independent columns "
                           f"in {_REDRAWS} attempts; the matrix rank may be below L")

    atx = a.T @ x
    norm = _frob(atx)
    if monitor is not None:
        monitor(0, norm)
    converged = False
    it = 0
    while it < max_it:
        it += 1
        cols = np.sort(rng.choice(n, size=batch, replace=False))
        w = modified_gram_schmidt(a[:, cols], basis=x)
        # the first L basis vectors are x itself, whose image is already known
        atw = np.concatenate([atx, a.T @ w[:, L:]], axis=1)
        c = atw.T @ atw
        c = 0.5 * (c + c.T)
        _, xt = symmetric_eigen(c, L, "largest", method="full")
        x = w @ xt
        atx = atw @ xt
        prev, norm = norm, _frob(atx)
        # the new span contains the old one, so the norm cannot fall beyond rounding
        if norm < prev * (1.0 - 1e-10):
            raise BackendError(f"MCLA norm decreased at iteration {it}: {prev!r} -> {norm!r}")
        if monitor is not None:
            monitor(it, norm)
        if prev > 0 and prev / norm > 1.0 - eta:
            converged = True
            break

    sigma = np.sqrt(np.sum(atx * atx, axis=0))
    safe = np.where(sigma > 0, sigma, 1.0)
    v = atx / safe
    if np.any(sigma == 0):
        v = _fill_null(v, sigma == 0, rng)
    return finish(sigma, x, v, iterations=it, converged=converged,
                  frobenius=norm, tolerance=eta)


def _fill_null(v: np.ndarray, zero: np.ndarray, rng) -> np.ndarray:
    good = v[:, ~zero]
    extra = modified_gram_schmidt(rng.standard_normal((v.shape[0], int(zero.sum()) + 2)), basis=good)
    v = v.copy()
    v[:, zero] = extra[:, good.shape[1]:good.shape[1] + int(zero.sum())]
    return v
