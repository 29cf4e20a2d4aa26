"""Additive Gaussian noise, relative noise level and sigma calibration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import GrayImage, clamp_to_range

SIGMA_BRACKET = (0.0, 512.0)
BISECTION_STEPS = 60


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0
    mu: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def gaussian_field(shape, seed: int) -> np.ndarray:
    """Standard normal samples by Box-Muller over a Philox counter stream."""
    size = int(np.prod(shape))
    half = (size + 1) // 2
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((2, half))
    radius = np.sqrt(-2.0 * np.log1p(-u[0]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[1]
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:size].reshape(shape)


def contaminate(image: GrayImage, spec: NoiseSpec) -> GrayImage:
    """Clamp(image + N) with N i.i.d. Gaussian of std ``spec.sigma``."""
    if spec.sigma == 0 and spec.mu == 0:
        return image
    noise = spec.mu + spec.sigma * gaussian_field(image.shape, spec.seed)
    return clamp_to_range(GrayImage(image.pixels + noise))


def relative_noise(reference: GrayImage, noisy: GrayImage) -> float:
    """Relative noise level in percent: 100 * ||noisy - ref||_F / ||ref||_F."""
    if reference.shape != noisy.shape:
        raise ValueError(f"image sizes differ: {reference.shape} vs {noisy.shape}")
    ref_norm = np.linalg.norm(reference.pixels)
    if ref_norm == 0:
        raise ValueError("reference image has zero norm")
    return 100.0 * float(np.linalg.norm(noisy.pixels - reference.pixels) / ref_norm)


def calibrate_sigma(image: GrayImage, target_zeta: float, tolerance: float = 0.5,
                    seed: int = 0) -> NoiseSpec:
    """Bisect sigma on [0, 512] until the clamped noisy image has the target zeta.

    The same seed is used for every evaluation, so the objective is a
    deterministic function of sigma.
    """
    if not 0 < target_zeta < 100:
        raise ValueError("target_zeta must lie in (0, 100)")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")

    z = gaussian_field(image.shape, seed)
    ref = image.pixels
    ref_norm = np.linalg.norm(ref)
    if ref_norm == 0:
        raise ValueError("reference image has zero norm")

    def zeta(sigma):
        noisy = np.clip(ref + sigma * z, 0.0, 255.0)
        return 100.0 * float(np.linalg.norm(noisy - ref) / ref_norm)

    lo, hi = SIGMA_BRACKET
    z_lo, z_hi = zeta(lo), zeta(hi)
    if z_hi < target_zeta - tolerance:
        raise CalibrationError(
            f"target zeta {target_zeta}% unreachable: clamping saturates at "
            f"{z_hi:.3f}% for sigma={hi}")
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        z_mid = zeta(mid)
        if not z_lo <= z_mid <= z_hi:
            raise CalibrationError(
                f"relative noise is not monotone in sigma near sigma={mid:.6g}; "
                f"target {target_zeta}% unreachable")
        if abs(z_mid - target_zeta) <= tolerance:
            return NoiseSpec(sigma=mid, seed=seed)
        if z_mid < target_zeta:
            lo, z_lo = mid, z_mid
        else:
            hi, z_hi = mid, z_mid
    raise CalibrationError(
        f"bisection did not reach {target_zeta}% +/- {tolerance}% in {BISECTION_STEPS} steps")
