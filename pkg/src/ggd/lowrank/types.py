from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class BackendOptions:
    """Tuning knobs shared by the singular-vector backends.

    ``tolerance=None`` selects each backend's own default (MCLA 1e-4, ALB and
    PIME 1e-8).  ``lanczos_steps=None`` means ``max(2L + 1, 20)`` capped at the
    matrix size; ``mcla_batch=None`` means ``L``.
    """

    tolerance: float | None = None
    max_iterations: int | None = None
    seed: int = 0
    lanczos_steps: int | None = None
    harmonic: bool = False
    oversampling: int = 0
    power_iterations: int = 0
    mcla_batch: int | None = None

    def __post_init__(self):
        if self.tolerance is not None and not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        for name in ("max_iterations", "lanczos_steps", "mcla_batch"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive")
        if self.oversampling < 0 or self.power_iterations < 0:
            raise ValueError("oversampling and power_iterations must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_(self, **changes) -> "BackendOptions":
        return replace(self, **changes)


@dataclass
class SingularTriplets:
    """Top-L approximate singular triplets, sigma descending.

    ``left_vectors`` and ``right_vectors`` hold the triplets in their columns.
    """

    values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    residuals: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True
    info: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.values)

    def truncate(self, L: int) -> "SingularTriplets":
        res = None if self.residuals is None else self.residuals[:L]
        return SingularTriplets(self.values[:L], self.left_vectors[:, :L],
                                self.right_vectors[:, :L], res, self.iterations,
                                self.converged, dict(self.info))


def sort_and_normalize(values, left, right, residuals=None):
    """Order by sigma descending and make each right vector's largest entry positive."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    left = left[:, order]
    right = right[:, order]
    if residuals is not None:
        residuals = np.asarray(residuals)[order]
    if right.shape[1]:
        peak = right[np.argmax(np.abs(right), axis=0), np.arange(right.shape[1])]
        flip = np.where(peak < 0, -1.0, 1.0)
        left = left * flip
        right = right * flip
    return values, left, right, residuals


def finish(values, left, right, residuals=None, iterations=0, converged=True, **info):
    values, left, right, residuals = sort_and_normalize(values, left, right, residuals)
    return SingularTriplets(values, np.ascontiguousarray(left), np.ascontiguousarray(right),
                            residuals, iterations, converged, info)


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def check_rank(a: np.ndarray, L: int) -> int:
    L = int(L)
    if not 1 <= L <= min(a.shape):
        raise ValueError(f"rank L must satisfy 1 <= L <= {min(a.shape)}, got {L}")
    return L


def rng_for(opts: BackendOptions) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(opts.seed))
