"""Two-stage eigensolver approach to the top singular triplets.

Stage 1 works on the normal matrix C = A^T A, which converges quickly but
cannot resolve residuals much below sqrt(eps) * ||A||.  When more accuracy is
requested, stage 2 refines the stage-1 triplets as eigenvectors of the
augmented matrix [[0, A^T], [A, 0]], applied implicitly.

Both stages use the same block Rayleigh-Ritz iteration: each sweep expands the
current block by its residuals and by the previous search directions, then
extracts the best block by Rayleigh-Ritz.
"""

from __future__ import annotations

import numpy as np

from .exact import symmetric_eigen
from .types import BackendOptions, as_matrix, check_rank, finish, rng_for

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 1000
_EPS = np.finfo(np.float64).eps
_STALL = 20


def _orthonormalize(w: np.ndarray, against: list[np.ndarray], drop: float = 1e-10) -> np.ndarray:
    """Columns of ``w`` made orthonormal to ``against`` and each other; dependent ones dropped."""
    if w.shape[1] == 0:
        return w
    norms = np.linalg.norm(w, axis=0)
    keep = norms > 0
    if not keep.any():
        return w[:, :0]
    w = w[:, keep] / norms[keep]
    for _ in range(2):
        for b in against:
            if b.shape[1]:
                w = w - b @ (b.T @ w)
    q, r = np.linalg.qr(w)
    good = np.abs(np.diag(r)) > drop
    q = q[:, good]
    # a second pass guards against loss of orthogonality in the QR input
    for b in against:
        if b.shape[1]:
            q = q - b @ (b.T @ q)
    q, _ = np.linalg.qr(q)
    return q


class BlockRitz:
    """Residual-expanded block Rayleigh-Ritz for the algebraically largest eigenpairs."""

    def __init__(self, apply, x0: np.ndarray):
        self.apply = apply
        self.x = _orthonormalize(x0, [])
        self.ax = apply(self.x)
        self.p = np.empty((self.x.shape[0], 0))
        self.ap = self.p
        self._rayleigh_ritz(self.x, self.ax, first=True)

    def _rayleigh_ritz(self, s, as_, first=False):
        k = self.x.shape[1]
        h = s.T @ as_
        h = 0.5 * (h + h.T)
        lam, y = symmetric_eigen(h, k, "largest", method="full")
        self.lam = lam
        x = s @ y
        ax = as_ @ y
        if not first:
            # new search directions: the part of the update outside the old block
            z = y.copy()
            z[:k] = 0.0
            for _ in range(2):
                z -= y @ (y.T @ z)
            zq = _orthonormalize(z, [])
            self.p = s @ zq
            self.ap = as_ @ zq
        self.x, self.ax = x, ax

    def residuals(self) -> np.ndarray:
        return self.ax - self.x * self.lam

    def step(self) -> None:
        r = self.residuals()
        w = _orthonormalize(r, [self.x, self.p])
        aw = self.apply(w) if w.shape[1] else w
        s = np.concatenate([self.x, self.p, w], axis=1)
        as_ = np.concatenate([self.ax, self.ap, aw], axis=1)
        self._rayleigh_ritz(s, as_)


def _null_left(u: np.ndarray, zero: np.ndarray, rng) -> np.ndarray:
    """Replace columns of ``u`` flagged ``zero`` by random unit vectors orthogonal to the rest."""
    u = u.copy()
    basis = [u[:, ~zero]]
    for j in np.flatnonzero(zero):
        c = _orthonormalize(rng.standard_normal((u.shape[0], 1)), basis)
        u[:, j] = c[:, 0]
        basis.append(c)
    return u


def _null_pairs(u: np.ndarray, v: np.ndarray, zero: np.ndarray, rng):
    """Orthonormal singular vectors for zero singular values after stage 2.

    The null space of the augmented matrix mixes [v; 0] and [0; u] freely, so
    the two halves of its eigenvectors need not be orthonormal.  The v halves
    still lie in null(A); they are re-orthonormalized, and the u columns are
    completed at random.
    """
    v = v.copy()
    good = _orthonormalize(v[:, zero], [v[:, ~zero]])
    idx = np.flatnonzero(zero)
    v[:, idx[:good.shape[1]]] = good
    if good.shape[1] < len(idx):
        short = np.zeros(v.shape[1], dtype=bool)
        short[idx[good.shape[1]:]] = True
        v = _null_left(v, short, rng)
    return _null_left(u, zero, rng), v


def triplet_residuals(a: np.ndarray, s: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """sqrt(||A v - s u||^2 + ||A^T u - s v||^2) for each triplet."""
    r1 = np.linalg.norm(a @ v - u * s, axis=0)
    r2 = np.linalg.norm(a.T @ u - v * s, axis=0)
    return np.sqrt(r1 ** 2 + r2 ** 2)


def pime(a, L: int, opts: BackendOptions | None = None):
    """Top-L singular triplets of ``a`` by the two-stage eigensolver."""
    a = as_matrix(a)
    opts = opts or BackendOptions()
    L = check_rank(a, L)
    m, n = a.shape
    delta = opts.tolerance if opts.tolerance is not None else DEFAULT_TOLERANCE
    max_it = opts.max_iterations or DEFAULT_MAX_ITERATIONS
    rng = rng_for(opts)
    k = min(L + min(L, 10), n)

    # stage 1 on C = A^T A
    x0 = rng.standard_normal((n, k))
    solver = BlockRitz(lambda x: a.T @ (a @ x), x0)
    floor = 10.0 * np.sqrt(n) * _EPS
    it1 = 0
    stagnated = False
    while True:
        lam = solver.lam[:L]
        cnorm = max(float(solver.lam[0]), 0.0)
        rn = np.linalg.norm(solver.residuals()[:, :L], axis=0)
        ok = rn < np.sqrt(np.abs(lam) * cnorm) * delta
        if np.all(ok):
            break
        # residuals on C bottom out near eps ||C||; beyond that only stage 2 helps
        if np.all(ok | (rn <= floor * cnorm)):
            stagnated = True
            break
        if it1 >= max_it:
            break
        solver.step()
        it1 += 1

    lam = np.maximum(solver.lam[:L], 0.0)
    sigma = np.sqrt(lam)
    v = solver.x[:, :L]
    av = a @ v
    # eigenvalues of C are only known to about floor * ||C||
    zero = lam <= floor * max(float(lam[0]), 0.0)
    u = av / np.where(zero, 1.0, sigma)
    if np.any(zero):
        sigma = np.where(zero, 0.0, sigma)
        u = _null_left(u, zero, rng)
    anorm = float(sigma[0])
    res = triplet_residuals(a, sigma, u, v)
    if anorm == 0.0 or np.all(res < anorm * delta):
        return finish(sigma, u, v, residuals=res, iterations=it1, converged=True,
                      stages=1, stage1_iterations=it1)

    # stage 2 on the augmented matrix, seeded with [v; u] / sqrt(2)
    ext_v = solver.x
    ext_u = a @ ext_v
    ext_s = np.sqrt(np.maximum(solver.lam, 0.0))
    nz = ext_s > 0
    ext_u[:, nz] /= ext_s[nz]
    ext_u[:, :L] = u
    seed = np.concatenate([ext_v, ext_u], axis=0) / np.sqrt(2.0)

    def apply_b(x):
        return np.concatenate([a.T @ x[n:], a @ x[:n]], axis=0)

    solver2 = BlockRitz(apply_b, seed)
    it2 = 0
    converged = False
    best = np.inf
    since_best = 0
    while True:
        bnorm = max(abs(float(solver2.lam[0])), anorm)
        rn = np.linalg.norm(solver2.residuals()[:, :L], axis=0)
        # for x = [v; u] / sqrt(2), ||B x - lam x|| is the triplet residual over sqrt(2)
        if np.all(rn < bnorm * delta / np.sqrt(2.0)):
            converged = True
            break
        worst = float(rn.max())
        if worst < 0.5 * best:
            best, since_best = worst, 0
        else:
            since_best += 1
        if it2 >= max_it or since_best > _STALL:
            break
        solver2.step()
        it2 += 1
    xb = solver2.x[:, :L]
    sigma = np.abs(solver2.lam[:L])
    v = xb[:n] / np.linalg.norm(xb[:n], axis=0)
    u = xb[n:] / np.linalg.norm(xb[n:], axis=0)
    zero = sigma <= n * _EPS * bnorm
    if np.any(zero):
        sigma = np.where(zero, 0.0, sigma)
        u, v = _null_pairs(u, v, zero, rng)
    res = triplet_residuals(a, sigma, u, v)
    return finish(sigma, u, v, residuals=res, iterations=it1 + it2, converged=converged,
                  stages=2, stage1_iterations=it1, stage2_iterations=it2,
                  stage1_stagnated=stagnated)
