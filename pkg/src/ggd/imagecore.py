"""Grayscale images, PGM (P2/P5) input/output and pixel range handling."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class PGMError(ValueError):
    """Base class for PGM decoding problems."""


class PGMHeaderError(PGMError):
    pass


class PGMMaxvalError(PGMError):
    pass


class PGMTruncatedError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A rows x cols grid of real intensities, nominal range [0, 255].

    ``pixels`` is a read-only float64 array of shape ``(rows, cols)``; its
    row-major flattening is the pixel order ``k = cols * i + j``.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("pixels must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, rows: int, cols: int, values) -> "GrayImage":
        values = np.asarray(values, dtype=np.float64)
        if values.size != rows * cols:
            raise ValueError(f"expected {rows * cols} pixels, got {values.size}")
        return cls(values.reshape(rows, cols))

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def flat(self) -> np.ndarray:
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"GrayImage(rows={self.rows}, cols={self.cols})"


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PGMHeaderError("unexpected end of file inside the header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        out.append(data[start:pos])
    return out, pos


def _int_token(tok: bytes, what: str) -> int:
    if not tok.isdigit():
        raise PGMHeaderError(f"malformed header: {what} is {tok!r}, expected a non-negative integer")
    return int(tok)


def parse_pgm(data: bytes) -> GrayImage:
    """Decode the bytes of a P2 or P5 file."""
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise PGMHeaderError(f"malformed header: bad magic number {data[:2]!r}, expected P2 or P5")
    magic = data[:2]
    toks, pos = _tokens(data, 3, 2)
    width = _int_token(toks[0], "width")
    height = _int_token(toks[1], "height")
    maxval = _int_token(toks[2], "maxval")
    if width < 1 or height < 1:
        raise PGMHeaderError(f"malformed header: image size {width}x{height} is empty")
    if maxval < 1:
        raise PGMHeaderError("malformed header: maxval must be positive")
    if maxval > 255:
        raise PGMMaxvalError(f"maxval {maxval} exceeds 255; 16-bit PGM is not supported")
    npix = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise PGMHeaderError("malformed header: missing whitespace after maxval")
        raster = data[pos + 1 : pos + 1 + npix]
        if len(raster) < npix:
            raise PGMTruncatedError(f"truncated pixel data: expected {npix} bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        fields = data[pos:].split()
        if len(fields) < npix:
            raise PGMTruncatedError(f"truncated pixel data: expected {npix} values, found {len(fields)}")
        try:
            values = np.array([int(f) for f in fields[:npix]], dtype=np.float64)
        except ValueError as exc:
            raise PGMError(f"non-integer pixel value in ASCII raster: {exc}") from None
    if values.max(initial=0) > maxval:
        raise PGMError(f"pixel value exceeds maxval {maxval}")
    return GrayImage(values.reshape(height, width))


def load_pgm(path: str | os.PathLike) -> GrayImage:
    """Read a binary (P5) or ASCII (P2) PGM with maxval <= 255.

    Missing files raise :class:`FileNotFoundError`; decoding problems raise a
    :class:`PGMError` subclass naming the defect.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_pgm(data)


def quantize(image: GrayImage) -> np.ndarray:
    """Round half away from zero, then clamp to [0, 255], as uint8."""
    p = image.pixels
    rounded = np.sign(p) * np.floor(np.abs(p) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def encode_pgm(image: GrayImage) -> bytes:
    header = f"P5\n{image.cols} {image.rows}\n255\n".encode("ascii")
    return header + quantize(image).tobytes()


def save_pgm(image: GrayImage, path: str | os.PathLike) -> None:
    """Write ``image`` as binary P5 with maxval 255."""
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image))


def from_rgb_average(r: GrayImage, g: GrayImage, b: GrayImage) -> GrayImage:
    """Gray level as the plain mean of three color channels."""
    if not (r.shape == g.shape == b.shape):
        raise ValueError(f"channel sizes differ: {r.shape}, {g.shape}, {b.shape}")
    return GrayImage((r.pixels + g.pixels + b.pixels) / 3.0)


def clamp_to_range(image: GrayImage) -> GrayImage:
    return GrayImage(np.clip(image.pixels, 0.0, 255.0))


def center_crop(image: GrayImage, rows: int, cols: int | None = None) -> GrayImage:
    cols = rows if cols is None else cols
    if rows > image.rows or cols > image.cols:
        raise ValueError(f"cannot crop {image.rows}x{image.cols} image to {rows}x{cols}")
    r0 = (image.rows - rows) // 2
    c0 = (image.cols - cols) // 2
    return GrayImage(image.pixels[r0 : r0 + rows, c0 : c0 + cols])
