"""Bundled 256x256 grayscale test images (Barbara, cameraman, mandrill)."""

from __future__ import annotations

import os
from importlib import resources

from .imagecore import GrayImage, load_pgm, parse_pgm

BUILTIN_IMAGES = ("barbara", "cameraman", "mandrill")


def load_builtin(name: str) -> GrayImage:
    if name not in BUILTIN_IMAGES:
        raise ValueError(f"unknown bundled image {name!r}; choose from {BUILTIN_IMAGES}")
    data = resources.files("ggd").joinpath("data", f"{name}.pgm").read_bytes()
    return parse_pgm(data)


def resolve_image(ref: str) -> tuple[str, GrayImage]:
    """Load ``ref`` as a PGM path, or as a bundled image name; returns (name, image)."""
    if os.path.exists(ref):
        return os.path.splitext(os.path.basename(ref))[0], load_pgm(ref)
    if ref in BUILTIN_IMAGES:
        return ref, load_builtin(ref)
    return ref, load_pgm(ref)  # raises FileNotFoundError with the path
