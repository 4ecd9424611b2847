"""Grayscale image input: binary PGM files and a seeded synthetic source."""
from __future__ import annotations

import os
import re

import numpy as np
from scipy.ndimage import gaussian_filter

__all__ = ["PgmError", "gen_synthetic", "load_pgm", "save_pgm"]

DEFAULT_SMOOTHNESS = 1.5
DEFAULT_NOISE = 3.0
DEFAULT_CONTRAST = 200.0

_HEADER = re.compile(rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


class PgmError(ValueError):
    """Malformed or unsupported PGM data."""


def load_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM (``P5``, maxval 255) into a ``uint8`` array."""
    with open(path, "rb") as fh:
        data = fh.read()
    m = _HEADER.match(data)
    if not m:
        raise PgmError(f"{os.fspath(path)}: not a binary PGM header")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise PgmError(f"{os.fspath(path)}: maxval {maxval} unsupported, expected 255")
    if width < 1 or height < 1:
        raise PgmError(f"{os.fspath(path)}: empty image")
    body = data[m.end():]
    need = width * height
    if len(body) < need:
        raise PgmError(f"{os.fspath(path)}: truncated pixel data ({len(body)} of {need} bytes)")
    return np.frombuffer(body[:need], dtype=np.uint8).reshape(height, width).copy()


def save_pgm(path, image) -> None:
    img = np.asarray(image)
    if img.ndim != 2 or img.min() < 0 or img.max() > 255:
        raise ValueError("expected a 2D array of values in [0, 255]")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.astype(np.uint8).tobytes())


def gen_synthetic(seed: int, size=256, smoothness: float = DEFAULT_SMOOTHNESS,
                  noise: float = DEFAULT_NOISE, contrast: float = DEFAULT_CONTRAST) -> np.ndarray:
    """Pseudo-natural grayscale image, fully determined by ``seed``.

    Recipe: white Gaussian noise low-pass filtered with a Gaussian kernel of
    width ``smoothness`` pixels, plus a random linear ramp worth 15% of the
    range, stretched to span ``contrast`` gray levels around 120, plus
    Gaussian sensor noise of std ``noise``, then rounded and clipped to
    ``[0, 255]``.  ``smoothness=0`` instead returns i.i.d. uniform pixels
    over the full range.

    Parameters
    ----------
    seed : int
    size : int or (int, int)
        ``(height, width)``; an int gives a square image.
    smoothness : float
        Filter width in pixels, ``>= 0``.
    noise : float
        Standard deviation of the additive sensor noise.  Lower values leave
        more AC coefficients at zero.
    contrast : float
        Peak-to-peak amplitude of the filtered field; the default spans
        ``[20, 220]``.
    """
    h, w = (size, size) if np.isscalar(size) else size
    if h < 1 or w < 1:
        raise ValueError("image size must be positive")
    if smoothness < 0 or noise < 0 or contrast < 0:
        raise ValueError("smoothness, noise and contrast must be non-negative")
    rng = np.random.default_rng(seed)
    if smoothness == 0:
        return rng.integers(0, 256, (h, w)).astype(np.uint8)
    field = gaussian_filter(rng.normal(size=(h, w)), smoothness, mode="reflect")
    field = (field - field.min()) / max(np.ptp(field), 1e-12)
    angle = rng.uniform(0, 2 * np.pi)
    ii, jj = np.mgrid[0:h, 0:w]
    ramp = np.cos(angle) * ii / max(h, 1) + np.sin(angle) * jj / max(w, 1)
    field = field + 0.15 * (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
    field = (field - field.min()) / max(np.ptp(field), 1e-12)
    img = 120.0 + contrast * (field - 0.5) + rng.normal(0.0, 1.0, (h, w)) * noise
    return np.clip(np.round(img), 0, 255).astype(np.uint8)
