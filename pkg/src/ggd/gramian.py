"""Double-centring of a geodesic distance matrix into its Gramian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .patchgraph import GeodesicMatrix
from .util import max_asymmetry


@dataclass(frozen=True, eq=False)
class GramianMatrix:
    g: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[0]


def _row_means(d: np.ndarray) -> np.ndarray:
    # add.reduce along the contiguous axis sums pairwise
    return np.add.reduce(d, axis=1) / d.shape[1]


def gramian_from_distances(d: GeodesicMatrix | np.ndarray, check: bool = True) -> GramianMatrix:
    """G[i, j] = -(D[i, j] - rowmean_i - colmean_j + mean) / 2.

    The distances themselves are centred, not their squares.
    """
    d = d.d if isinstance(d, GeodesicMatrix) else np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if check and not np.all(np.isfinite(d)):
        raise ValueError("distance matrix has non-finite entries")
    asym = max_asymmetry(d)
    if check:
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        scale = float(np.max(np.abs(d), initial=0.0))
        if asym > 1e-12 * max(scale, 1.0):
            raise ValueError("distance matrix is not symmetric")
    row = _row_means(d)
    col = row if asym == 0 else np.add.reduce(d, axis=0) / n
    grand = math.fsum(row) / n
    g = np.subtract(d, row[:, None])
    g -= col[None, :]
    g += grand
    g *= -0.5
    return GramianMatrix(g=g)
