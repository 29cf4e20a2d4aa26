"""Interchangeable top-L singular-triplet backends for symmetric Gramians."""

from __future__ import annotations

from .exact import dense_svd, exact_symmetric_svd, symmetric_eigen, tridiagonalize
from .lanczos import alb, lanczos_bidiagonalization
from .mcla import mcla
from .pime import pime
from .rsvd import rsvd
from .types import BackendError, BackendOptions, SingularTriplets

BACKENDS = {
    "exact": exact_symmetric_svd,
    "mcla": mcla,
    "alb": alb,
    "pime": pime,
    "rsvd": rsvd,
}


def singular_triplets(a, L: int, backend: str = "exact",
                      opts: BackendOptions | None = None) -> SingularTriplets:
    """Dispatch to a backend by name."""
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(a, L, opts or BackendOptions())


__all__ = [
    "BACKENDS", "BackendError", "BackendOptions", "SingularTriplets", "alb", "dense_svd",
    "exact_symmetric_svd", "lanczos_bidiagonalization", "mcla", "pime", "rsvd",
    "singular_triplets", "symmetric_eigen", "tridiagonalize",
]
