"""Dense symmetric eigensolver and the exact singular-vector backend.

The matrix is reduced to tridiagonal form with blocked Householder
reflections, then diagonalised by implicitly shifted QL.  When only a few
eigenpairs of a large matrix are needed the QL sweep runs without vectors and
the selected eigenvectors are recovered by inverse iteration on the
tridiagonal matrix, then mapped back through the reflections.
"""

from __future__ import annotations

import numba
import numpy as np

from ..util import max_asymmetry
from .types import (BackendError, BackendOptions, SingularTriplets, as_matrix, check_rank,
                    finish)

_EPS = np.finfo(np.float64).eps
_ROW_BLOCK = 1024


def _householder(x: np.ndarray):
    """(v, tau, beta) with (I - tau v v^T) x = beta e_1 and v[0] = 1."""
    alpha = x[0]
    xnorm = np.linalg.norm(x[1:])
    v = np.empty_like(x)
    v[0] = 1.0
    if xnorm == 0.0:
        v[1:] = 0.0
        return v, 0.0, alpha
    beta = -np.copysign(np.hypot(alpha, xnorm), alpha)
    tau = (beta - alpha) / beta
    v[1:] = x[1:] / (alpha - beta)
    return v, tau, beta


@numba.njit(cache=True, fastmath=True)
def _symv_lower(a, off, x):
    """y = S x for the symmetric matrix whose lower triangle is a[off:, off:].

    Each stored element is read once, which halves the memory traffic of a
    full matrix-vector product.
    """
    m = x.shape[0]
    y = np.zeros(m)
    for i in range(m):
        row = a[off + i, off:]
        xi = x[i]
        s = 0.0
        for j in range(i):
            aij = row[j]
            s += aij * x[j]
            y[j] += aij * xi
        y[i] += s + row[i] * xi
    return y


class Tridiagonal:
    """Result of ``tridiagonalize``: A = Q T Q^T with Q a product of reflectors.

    Reflector j acts on coordinates j+1..n-1; it is stored as row ``j - k0`` of
    the panel that starts at ``k0``.
    """

    def __init__(self, d, e, panels, n):
        self.d = d
        self.e = e
        self.panels = panels  # list of (k0, vt (nb, n-k0), taus (nb,))
        self.n = n

    def apply_q(self, y: np.ndarray) -> np.ndarray:
        """Return Q @ y, overwriting ``y`` (shape (n, m))."""
        for k0, vt, taus in reversed(self.panels):
            for i in range(len(taus) - 1, -1, -1):
                tau = taus[i]
                if tau == 0.0:
                    continue
                j = k0 + i
                v = vt[i, j + 1 - k0:]
                block = y[j + 1:]
                block -= np.outer(tau * v, v @ block)
        return y

    def q_matrix(self) -> np.ndarray:
        return self.apply_q(np.eye(self.n))


def tridiagonalize(a: np.ndarray, block: int = 48, overwrite: bool = False) -> Tridiagonal:
    """Blocked Householder reduction of a symmetric matrix.

    Each panel accumulates ``nb`` reflections as A - V W^T - W V^T so that the
    trailing matrix is updated with matrix-matrix products only once per panel.
    Only the lower triangle is read or updated.
    """
    a = np.array(a, dtype=np.float64, order="C", copy=not overwrite)
    n = a.shape[0]
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    panels = []
    k0 = 0
    while k0 < n - 2:
        nb = min(block, n - 2 - k0)
        m = n - k0
        vt = np.zeros((nb, m))
        wt = np.zeros((nb, m))
        taus = np.zeros(nb)
        for i in range(nb):
            j = k0 + i
            r = j - k0
            col = a[j:, j].copy()
            if i:
                col -= vt[:i, r:].T @ wt[:i, r] + wt[:i, r:].T @ vt[:i, r]
            d[j] = col[0]
            v, tau, beta = _householder(col[1:])
            e[j] = beta
            taus[i] = tau
            vt[i, r + 1:] = v
            if tau == 0.0:
                continue
            vb = vt[:i, r + 1:]
            wb = wt[:i, r + 1:]
            p = _symv_lower(a, j + 1, v)
            if i:
                p -= vb.T @ (wb @ v) + wb.T @ (vb @ v)
            p *= tau
            wt[i, r + 1:] = p - (0.5 * tau * (p @ v)) * v
        # trailing update in row blocks to bound the temporaries
        r0 = k0 + nb
        left = np.concatenate([vt[:, nb:], wt[:, nb:]]).T
        right = np.concatenate([wt[:, nb:], vt[:, nb:]])
        for lo in range(0, n - r0, _ROW_BLOCK):
            hi = min(n - r0, lo + _ROW_BLOCK)
            a[r0 + lo:r0 + hi, r0:r0 + hi] -= left[lo:hi] @ right[:, :hi]
        panels.append((k0, vt, taus))
        k0 += nb
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        d[n - 1] = a[n - 1, n - 1]
        e[n - 2] = a[n - 1, n - 2]
    elif n == 1:
        d[0] = a[0, 0]
    return Tridiagonal(d, e, panels, n)


@numba.njit(cache=True)
def _tql(d, e, zt, vectors):
    """Implicit QL on the tridiagonal (d, e); rotations are applied to rows of zt.

    ``e`` has length n with e[i] coupling i and i+1.  Returns False when the
    iteration budget of 30 n sweeps is exhausted.
    """
    n = len(d)
    budget = 30 * n
    sweeps = 0
    eps = np.finfo(np.float64).eps
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > budget:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if vectors:
                    for k in range(zt.shape[1]):
                        f = zt[i + 1, k]
                        zt[i + 1, k] = s * zt[i, k] + c * f
                        zt[i, k] = c * zt[i, k] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


@numba.njit(cache=True)
def _tridiag_solve(d, e, lam, b, tiny):
    """Solve (T - lam I) x = b by elimination with partial pivoting."""
    n = len(d)
    # rows of U: u0 (diag), u1, u2 (super-diagonals)
    u0 = np.empty(n)
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    x = b.copy()
    a0 = d[0] - lam
    a1 = e[0] if n > 1 else 0.0
    a2 = 0.0
    for i in range(n - 1):
        below0 = e[i]
        below1 = d[i + 1] - lam
        below2 = e[i + 1] if i + 2 < n else 0.0
        if abs(below0) > abs(a0):
            u0[i] = below0
            u1[i] = below1
            u2[i] = below2
            piv = a0 / below0
            na0 = a1 - piv * below1
            na1 = a2 - piv * below2
            t = x[i]
            x[i] = x[i + 1]
            x[i + 1] = t - piv * x[i + 1]
        else:
            if a0 == 0.0:
                a0 = tiny
            u0[i] = a0
            u1[i] = a1
            u2[i] = a2
            piv = below0 / a0
            na0 = below1 - piv * a1
            na1 = below2 - piv * a2
            x[i + 1] -= piv * x[i]
        a0 = na0
        a1 = na1
        a2 = 0.0
    if a0 == 0.0:
        a0 = tiny
    u0[n - 1] = a0
    for i in range(n - 1, -1, -1):
        s = x[i]
        if i + 1 < n:
            s -= u1[i] * x[i + 1]
        if i + 2 < n:
            s -= u2[i] * x[i + 2]
        x[i] = s / u0[i]
    return x


@numba.njit(cache=True)
def _inverse_iteration(d, e, lams, starts, cluster_gap):
    """Eigenvectors of the tridiagonal matrix for the sorted eigenvalues ``lams``."""
    n = len(d)
    k = len(lams)
    out = np.empty((k, n))
    tnorm = 0.0
    for i in range(n):
        s = abs(d[i])
        if i > 0:
            s += abs(e[i - 1])
        if i < n - 1:
            s += abs(e[i])
        tnorm = max(tnorm, s)
    tiny = max(tnorm, 1e-300) * np.finfo(np.float64).eps
    first = 0
    for j in range(k):
        lam = lams[j]
        if j > 0 and lams[j] - lams[j - 1] > cluster_gap:
            first = j
        elif j > 0 and lams[j] - lams[j - 1] <= tiny:
            # perturb coincident shifts so the solves differ
            lam = lams[j - 1] + tiny
            lams[j] = lam
        x = starts[j].copy()
        x /= np.sqrt(np.sum(x * x))
        for _ in range(4):
            y = _tridiag_solve(d, e, lam, x, tiny)
            for q in range(first, j):
                y -= (out[q] @ y) * out[q]
            nrm = np.sqrt(np.sum(y * y))
            x = y / nrm
        out[j] = x
    return out


def symmetric_eigen(a: np.ndarray, count: int | None = None, which: str = "magnitude",
                    overwrite: bool = False, method: str = "auto"):
    """Eigenpairs of a symmetric matrix.

    ``which="magnitude"`` keeps the ``count`` eigenvalues of largest absolute
    value, ``which="largest"`` the algebraically largest.  Returns the
    selected eigenvalues and an (n, count) array of orthonormal eigenvectors.
    ``method`` is ``"full"`` (QL with accumulated rotations), ``"inverse"``
    (values by QL, vectors by inverse iteration) or ``"auto"``.
    """
    n = a.shape[0]
    count = n if count is None else int(count)
    if n == 0 or count == 0:
        return np.empty(0), np.empty((n, 0))
    if method == "auto":
        method = "full" if n <= 600 or count > n // 8 else "inverse"
    tri = tridiagonalize(a, overwrite=overwrite)
    e = np.zeros(n)
    e[:n - 1] = tri.e
    if method == "full":
        d = tri.d.copy()
        zt = np.ascontiguousarray(tri.q_matrix().T)
        if not _tql(d, e, zt, True):
            raise BackendError("QL iteration failed to converge")
        sel = _select(d, count, which)
        return d[sel], np.ascontiguousarray(zt[sel].T)
    if method != "inverse":
        raise ValueError(f"unknown eigensolver method {method!r}")
    d = tri.d.copy()
    if not _tql(d, e, np.empty((0, 0)), False):
        raise BackendError("QL iteration failed to converge")
    sel = _select(d, count, which)
    lams = np.sort(d[sel])
    scale = max(float(np.max(np.abs(d))), 1e-300)
    starts = np.random.Generator(np.random.PCG64(0x5EED)).standard_normal((count, n))
    sub = np.zeros(n)
    sub[:n - 1] = tri.e
    y = _inverse_iteration(tri.d, sub, lams, starts, 1e-3 * scale)
    vecs = tri.apply_q(np.ascontiguousarray(y.T))
    key = np.abs(lams) if which == "magnitude" else lams
    order = np.argsort(-key, kind="stable")
    return lams[order], vecs[:, order]


def _select(d, count, which):
    key = np.abs(d) if which == "magnitude" else d
    return np.argsort(-key, kind="stable")[:count]


def _check_symmetric(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"exact backend needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if max_asymmetry(a) > 1e-10 * scale:
        raise ValueError("exact backend needs a symmetric matrix")


def exact_symmetric_svd(a, L: int, opts: BackendOptions | None = None,
                        overwrite: bool = False) -> SingularTriplets:
    """Top-L singular triplets of a symmetric matrix from its eigenpairs.

    sigma = |lambda|, v = nu and u = sign(lambda) nu.
    """
    a = as_matrix(a)
    _check_symmetric(a)
    L = check_rank(a, L)
    lams, nus = symmetric_eigen(a, L, "magnitude", overwrite=overwrite)
    signs = np.where(lams < 0, -1.0, 1.0)
    return finish(np.abs(lams), nus * signs, nus.copy(), eigenvalues=lams)


def _complete(basis: np.ndarray, dim: int, total: int) -> np.ndarray:
    """Extend orthonormal columns to ``total`` orthonormal columns in R^dim."""
    have = basis.shape[1]
    if have >= total:
        return basis[:, :total]
    cand = np.concatenate([basis, np.eye(dim)], axis=1)
    q = basis
    for j in range(have, cand.shape[1]):
        c = cand[:, j].copy()
        for _ in range(2):
            c -= q @ (q.T @ c)
        nrm = np.linalg.norm(c)
        if nrm > 1e-8:
            q = np.concatenate([q, (c / nrm)[:, None]], axis=1)
            if q.shape[1] == total:
                break
    return q


def dense_svd(b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD of a small dense matrix, b = U diag(s) V^T, s descending.

    Works on the symmetric embedding [[0, b^T], [b, 0]], whose eigenvalues are
    +-s with eigenvectors [v; +-u] / sqrt(2).  A markedly rectangular matrix is
    first reduced to its triangular QR factor.
    """
    b = as_matrix(b)
    m, n = b.shape
    if m == 0 or n == 0:
        k = min(m, n)
        return np.empty(k), np.zeros((m, k)), np.zeros((n, k))
    if m > 2 * n:
        q, r = np.linalg.qr(b)
        s, u, v = dense_svd(r)
        return s, q @ u, v
    if n > 2 * m:
        s, u, v = dense_svd(b.T)
        return s, v, u
    k = min(m, n)
    aug = np.zeros((m + n, m + n))
    aug[:n, n:] = b.T
    aug[n:, :n] = b
    lams, vecs = symmetric_eigen(aug, k, "largest", method="full")
    s = np.maximum(lams, 0.0)
    v = vecs[:n] * np.sqrt(2.0)
    u = vecs[n:] * np.sqrt(2.0)
    tol = max(m, n) * _EPS * max(float(s[0]), 1e-300) * 16
    good = int(np.sum(s > tol))
    s[good:] = 0.0
    v = v[:, :good] / np.linalg.norm(v[:, :good], axis=0)
    u = u[:, :good] / np.linalg.norm(u[:, :good], axis=0)
    return s, _complete(u, m, k), _complete(v, n, k)
