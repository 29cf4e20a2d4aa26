"""Regenerate the bundled 256x256 test images from their public sources.

Usage: python scripts/make_test_images.py BARBARA_PNG BABOON_PNG CAMERA_PNG

Sources: ``sporco/data/barbara.png`` (sporco wheel), ``baboon.png`` (npm
package ``baboon-image``) and ``skimage/data/camera.png`` (scikit-image).
Color images are reduced to gray by averaging the three channels, then the
central 256x256 block is kept at native resolution.
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from ggd.imagecore import GrayImage, center_crop, from_rgb_average, save_pgm

OUT = Path(__file__).resolve().parents[1] / "src" / "ggd" / "data"


def gray(path):
    a = np.asarray(Image.open(path), dtype=np.float64)
    if a.ndim == 2:
        return GrayImage(a)
    return from_rgb_average(*(GrayImage(a[:, :, c]) for c in range(3)))


def main(argv):
    for name, path in zip(("barbara", "mandrill", "cameraman"), argv):
        save_pgm(center_crop(gray(path), 256), OUT / f"{name}.pgm")


if __name__ == "__main__":
    main(sys.argv[1:])
