"""Sweep plans and deterministic per-run seeds."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..lowrank import BACKENDS

# (delta, rho, L) grids per noise level
DEFAULT_GRIDS: dict[float, tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]] = {
    20.0: ((8, 10, 12), (3, 5, 7), (15, 20, 25)),
    30.0: ((10, 12, 14), (5, 7, 9), (15, 20, 25)),
    40.0: ((12, 14, 16), (7, 9, 11), (15, 20, 25)),
}

_MASK = (1 << 64) - 1


def stable_hash(*coords) -> int:
    """64-bit hash of the coordinates that does not depend on the interpreter session."""
    text = "\x1f".join(repr(c) for c in coords)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def run_seed(base_seed: int, image: str, zeta: float, backend: str,
             delta: int, rho: int, rank: int) -> int:
    return (base_seed + stable_hash(image, float(zeta), backend, delta, rho, rank)) & _MASK


def noise_seed(base_seed: int, image: str, zeta: float) -> int:
    """Seed of the one noisy realisation shared by every run on (image, zeta)."""
    return (base_seed + stable_hash("noise", image, float(zeta))) & _MASK


def base_from_run(seed: int, image: str, zeta: float, backend: str,
                  delta: int, rho: int, rank: int) -> int:
    """Invert ``run_seed`` so a CSV row alone recovers its noise seed."""
    return (seed - stable_hash(image, float(zeta), backend, delta, rho, rank)) & _MASK


@dataclass(frozen=True)
class SweepPlan:
    grids: dict = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    backends: tuple[str, ...] = ("exact",)
    repetitions: int = 1
    base_seed: int = 0

    def __post_init__(self):
        for b in self.backends:
            if b not in BACKENDS:
                raise ValueError(f"unknown backend {b!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for zeta, (deltas, rhos, ranks) in self.grids.items():
            if not (deltas and rhos and ranks):
                raise ValueError(f"empty grid for zeta={zeta}")
            if any(r < 3 or r % 2 == 0 for r in rhos):
                raise ValueError(f"rho values must be odd and >= 3, got {rhos}")

    @classmethod
    def for_levels(cls, zetas, **kw) -> "SweepPlan":
        grids = {}
        for z in zetas:
            z = float(z)
            if z not in DEFAULT_GRIDS:
                raise ValueError(f"no default grid for zeta={z:g}; give delta/rho/rank lists")
            grids[z] = DEFAULT_GRIDS[z]
        return cls(grids=grids, **kw)

    def cells(self, zeta: float):
        deltas, rhos, ranks = self.grids[zeta]
        for d in deltas:
            for r in rhos:
                for L in ranks:
                    yield d, r, L
