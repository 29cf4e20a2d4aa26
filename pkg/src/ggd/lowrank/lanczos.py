"""Golub-Kahan-Lanczos bidiagonalization and the augmented restarted solver (ALB).

Factorizations satisfy  A P = Q B  and  A^T Q = P B^T + r e_k^T  with P, Q
column-orthonormal and B upper triangular (bidiagonal before any restart).
"""

from __future__ import annotations

import numpy as np

from .exact import dense_svd
from .types import BackendError, BackendOptions, as_matrix, check_rank, finish, rng_for

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_RESTARTS = 500
_BREAKDOWN = 1e-14
_EPS = np.finfo(np.float64).eps


def _reorthogonalize(c: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """One classical Gram-Schmidt sweep, repeated once if the norm drops below 1/sqrt 2."""
    if basis.shape[1] == 0:
        return c
    before = np.linalg.norm(c)
    c = c - basis @ (basis.T @ c)
    if np.linalg.norm(c) < before / np.sqrt(2.0):
        c = c - basis @ (basis.T @ c)
    return c


def _random_orthogonal(basis: np.ndarray, rng) -> np.ndarray:
    dim = basis.shape[0]
    for _ in range(10):
        c = _reorthogonalize(rng.standard_normal(dim), basis)
        c = _reorthogonalize(c, basis)
        nrm = np.linalg.norm(c)
        if nrm > 1e-8:
            return c / nrm
    raise BackendError("could not draw a vector outside the current Krylov basis")


class Factorization:
    """Working arrays of a partial bidiagonalization with ``k`` filled columns."""

    def __init__(self, a: np.ndarray, steps: int, rng, anorm: float):
        m, n = a.shape
        self.a = a
        self.p = np.zeros((n, steps))
        self.q = np.zeros((m, steps))
        self.b = np.zeros((steps, steps))
        self.r = np.zeros(n)
        self.k = 0
        self.rng = rng
        self.small = _BREAKDOWN * anorm

    def start(self, p1: np.ndarray) -> None:
        self.p[:, 0] = p1
        q = self.a @ p1
        alpha = np.linalg.norm(q)
        if alpha <= self.small:
            alpha = 0.0
            q = _random_orthogonal(self.q[:, :0], self.rng)
        else:
            q = q / alpha
        self.q[:, 0] = q
        self.b[0, 0] = alpha
        self.k = 1
        self._residual()

    def _residual(self) -> None:
        k = self.k
        r = self.a.T @ self.q[:, k - 1] - self.p[:, :k] @ self.b[k - 1, :k]
        self.r = _reorthogonalize(r, self.p[:, :k])

    def extend(self, steps: int) -> None:
        """Continue the bidiagonalization until ``steps`` columns are filled."""
        a, p, q, b = self.a, self.p, self.q, self.b
        for j in range(self.k, steps):
            beta = np.linalg.norm(self.r)
            if beta <= self.small:
                beta = 0.0
                pj = _random_orthogonal(p[:, :j], self.rng)
            else:
                pj = self.r / beta
            p[:, j] = pj
            b[j - 1, j] = beta
            c = a @ pj - beta * q[:, j - 1]
            c = _reorthogonalize(c, q[:, :j])
            alpha = np.linalg.norm(c)
            if alpha <= self.small:
                alpha = 0.0
                c = _random_orthogonal(q[:, :j], self.rng)
            else:
                c = c / alpha
            q[:, j] = c
            b[j, j] = alpha
            self.k = j + 1
            self._residual()

    def view(self):
        k = self.k
        return self.p[:, :k], self.q[:, :k], self.b[:k, :k], self.r


def lanczos_bidiagonalization(a, p1, steps: int, seed: int = 0):
    """``steps`` Lanczos steps from the unit vector ``p1``; returns (P, Q, B, r)."""
    a = as_matrix(a)
    p1 = np.asarray(p1, dtype=np.float64)
    steps = int(steps)
    if not 1 <= steps <= min(a.shape):
        raise ValueError(f"steps must satisfy 1 <= steps <= {min(a.shape)}, got {steps}")
    if p1.shape != (a.shape[1],) or abs(np.linalg.norm(p1) - 1.0) > 1e-10:
        raise ValueError("p1 must be a unit vector of length a.shape[1]")
    f = Factorization(a, steps, np.random.Generator(np.random.PCG64(seed)),
                      float(np.linalg.norm(a)))
    f.start(p1)
    f.extend(steps)
    p, q, b, r = f.view()
    return p.copy(), q.copy(), b.copy(), r.copy()


def _ritz_restart(f: Factorization, u, s, v, L: int) -> None:
    """Keep L Ritz triplets plus the residual direction as the new start."""
    a = f.a
    h = f.k
    rnorm = np.linalg.norm(f.r)
    p_next = f.r / rnorm if rnorm > f.small else _random_orthogonal(f.p[:, :h], f.rng)
    new_p = f.p[:, :h] @ v[:, :L]
    new_q = f.q[:, :h] @ u[:, :L]
    ap = a @ p_next
    rho = new_q.T @ ap
    c = _reorthogonalize(ap - new_q @ rho, new_q)
    alpha = np.linalg.norm(c)
    c = c / alpha if alpha > f.small else _random_orthogonal(new_q, f.rng)
    if alpha <= f.small:
        alpha = 0.0
    f.p[:, :L] = new_p
    f.p[:, L] = p_next
    f.q[:, :L] = new_q
    f.q[:, L] = c
    f.b[:] = 0.0
    f.b[np.arange(L), np.arange(L)] = s[:L]
    f.b[:L, L] = rho
    f.b[L, L] = alpha
    f.k = L + 1
    f._residual()


def _harmonic_restart(f: Factorization, L: int) -> None:
    """Restart with the harmonic Ritz vectors of the L largest triplets of [B, beta e_k]."""
    a = f.a
    h = f.k
    bh = f.b[:h, :h]
    beta = np.linalg.norm(f.r)
    p_next = f.r / beta
    wide = np.zeros((h, h + 1))
    wide[:, :h] = bh
    wide[h - 1, h] = beta
    s2, u2, _ = dense_svd(wide)
    eh = np.zeros(h)
    eh[-1] = 1.0
    m = np.zeros((h + 1, L + 1))
    m[:h, :L] = np.linalg.solve(bh, u2[:, :L] * s2[:L])
    m[:h, L] = -beta * np.linalg.solve(bh, eh)
    m[h, L] = 1.0
    qq, rr = np.linalg.qr(m)
    diag = np.abs(np.diag(rr))
    if diag.min() <= _EPS * diag.max() * (h + 1):
        raise BackendError("harmonic restart: triangular factor is numerically singular")
    p_full = np.concatenate([f.p[:, :h], p_next[:, None]], axis=1)
    new_p = p_full @ qq
    new_q = f.q[:, :h] @ u2[:, :L]
    resid = a @ p_next - beta * f.q[:, h - 1]
    gamma = new_q.T @ resid
    c = _reorthogonalize(resid - new_q @ gamma, new_q)
    alpha = np.linalg.norm(c)
    c = c / alpha if alpha > f.small else _random_orthogonal(new_q, f.rng)
    if alpha <= f.small:
        alpha = 0.0
    top = np.zeros((L + 1, L + 1))
    top[np.arange(L), np.arange(L)] = s2[:L]
    top[:L, L] = gamma
    top[L, L] = alpha
    f.p[:, :L + 1] = new_p
    f.q[:, :L] = new_q
    f.q[:, L] = c
    f.b[:] = 0.0
    # B = top @ inv(R)
    f.b[:L + 1, :L + 1] = np.linalg.solve(rr.T, top.T).T
    f.k = L + 1
    f._residual()


def alb(a, L: int, opts: BackendOptions | None = None, monitor=None):
    """Top-L singular triplets by augmented implicitly restarted Lanczos bidiagonalization.

    ``monitor(P, Q, B, r)`` is called on every completed factorization.
    """
    a = as_matrix(a)
    opts = opts or BackendOptions()
    L = check_rank(a, L)
    dims = min(a.shape)
    h = min(opts.lanczos_steps or max(2 * L + 1, 20), dims)
    if h <= L and h < dims:
        raise ValueError(f"lanczos_steps h={h} must exceed L={L}")
    tol = opts.tolerance if opts.tolerance is not None else DEFAULT_TOLERANCE
    max_restarts = opts.max_iterations or DEFAULT_MAX_RESTARTS
    rng = rng_for(opts)
    anorm = float(np.linalg.norm(a))
    f = Factorization(a, h, rng, anorm)
    p1 = rng.standard_normal(a.shape[1])
    f.start(p1 / np.linalg.norm(p1))
    f.extend(h)

    restarts = 0
    harmonic_used = 0
    while True:
        p, q, b, r = f.view()
        if monitor is not None:
            monitor(p, q, b, r)
        s, u, v = dense_svd(b)
        rnorm = np.linalg.norm(r)
        resid = rnorm * np.abs(u[-1, :L])
        smax = s[0] if s[0] > 0 else 1.0
        converged = bool(np.all(resid <= tol * smax))
        if converged or restarts >= max_restarts:
            break
        restarts += 1
        cond_ok = s[-1] > 0 and s[0] / s[-1] <= _EPS ** -0.5
        if opts.harmonic and cond_ok:
            _harmonic_restart(f, L)
            harmonic_used += 1
        else:
            _ritz_restart(f, u, s, v, L)
        f.extend(h)

    values = s[:L]
    left = q @ u[:, :L]
    right = p @ v[:, :L]
    return finish(values, left, right, residuals=resid, iterations=restarts,
                  converged=converged, lanczos_steps=h, harmonic_restarts=harmonic_used)
