"""Geodesic Gramian denoising of grayscale images with pluggable low-rank backends."""

from .datasets import BUILTIN_IMAGES, load_builtin
from .imagecore import GrayImage, center_crop, load_pgm, save_pgm
from .lowrank import BackendOptions, SingularTriplets, singular_triplets
from .metrics import evaluate
from .noise import NoiseSpec, calibrate_sigma, contaminate
from .pipeline import DenoiseParams, denoise, denoise_detailed

__all__ = [
    "BUILTIN_IMAGES", "BackendOptions", "DenoiseParams", "GrayImage", "NoiseSpec",
    "SingularTriplets", "calibrate_sigma", "center_crop", "contaminate", "denoise",
    "denoise_detailed", "evaluate", "load_builtin", "load_pgm", "save_pgm", "singular_triplets",
]
