"""Reconstruction quality: relative error, PSNR and global SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import GrayImage

PEAK = 255.0
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2
C3 = C2 / 2.0


@dataclass(frozen=True)
class MetricReport:
    re: float
    psnr: float
    ssim: float

    def format(self) -> str:
        return f"re={self.re:.4f} psnr={self.psnr:.2f} ssim={self.ssim:.4f}"


def _check(reference: GrayImage, test: GrayImage) -> None:
    if reference.shape != test.shape:
        raise ValueError(f"image sizes differ: {reference.shape} vs {test.shape}")


def re(reference: GrayImage, test: GrayImage) -> float:
    """||reference - test||_F / ||reference||_F."""
    _check(reference, test)
    denom = np.linalg.norm(reference.pixels)
    if denom == 0:
        raise ValueError("reference image has zero norm")
    return float(np.linalg.norm(reference.pixels - test.pixels) / denom)


def psnr(reference: GrayImage, test: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; ``inf`` for identical images."""
    _check(reference, test)
    rmse = np.linalg.norm(reference.pixels - test.pixels) / math.sqrt(reference.pixels.size)
    if rmse == 0:
        return math.inf
    return float(20.0 * math.log10(PEAK / rmse))


def ssim_factors(reference: GrayImage, test: GrayImage) -> tuple[float, float, float]:
    """Luminance, contrast and structure factors over the whole image."""
    _check(reference, test)
    if reference.pixels.size < 2:
        raise ValueError("SSIM needs at least two pixels")
    x = reference.pixels.ravel()
    y = test.pixels.ravel()
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    vx = float(np.mean(dx * dx))
    vy = float(np.mean(dy * dy))
    cov = float(np.mean(dx * dy))
    sx, sy = math.sqrt(vx), math.sqrt(vy)
    lum = (2 * mx * my + C1) / (mx * mx + my * my + C1)
    con = (2 * sx * sy + C2) / (vx + vy + C2)
    struct = (cov + C3) / (sx * sy + C3)
    return float(lum), con, struct


def ssim(reference: GrayImage, test: GrayImage) -> float:
    lum, con, struct = ssim_factors(reference, test)
    return lum * con * struct


def evaluate(reference: GrayImage, test: GrayImage) -> MetricReport:
    return MetricReport(re=re(reference, test), psnr=psnr(reference, test),
                        ssim=ssim(reference, test))
