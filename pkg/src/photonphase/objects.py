"""Synthetic phase-object generators.

Stand-ins for the image corpora the bench displayed: an integrated-circuit
style generator (axis-aligned rectangles, periodic track arrays, few
quantised levels, sharp edges) and a "natural" generator (smoothed random
fields with broad histograms).  Every image is a pure function of
(seed, index) through the counter-based generator.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.ndimage import gaussian_filter

from . import rng
from .errors import UnknownClass

__all__ = ["IC_PALETTE", "synth_object", "synth_objects", "load_object_dir"]

# eight quantised gray levels, the defining trait of the IC class
IC_PALETTE = np.round(np.linspace(0, 255, 8)).astype(np.uint8)


def _draws(seed: int, index: int, count: int) -> np.ndarray:
    return rng.uniforms(seed, rng.STREAM_OBJECTS, index, count)


def _ic_layout(size: int, seed: int, index: int) -> np.ndarray:
    u = _draws(seed, index, 256)
    pos = 0

    def take(n):
        nonlocal pos
        vals = u[pos : pos + n]
        pos += n
        return vals

    snap = max(size // 32, 2)  # Manhattan grid quantum
    img = np.full((size, size), IC_PALETTE[int(take(1)[0] * 8) % 8], dtype=np.uint8)

    n_rect = 4 + int(take(1)[0] * 7)
    for _ in range(n_rect):
        v = take(5)
        w = snap * (1 + int(v[0] * (size // (2 * snap))))
        h = snap * (1 + int(v[1] * (size // (2 * snap))))
        r0 = snap * int(v[2] * ((size - h) / snap + 1))
        c0 = snap * int(v[3] * ((size - w) / snap + 1))
        level = IC_PALETTE[int(v[4] * 8) % 8]
        img[r0 : r0 + h, c0 : c0 + w] = level

    n_tracks = 1 + int(take(1)[0] * 3)
    for _ in range(n_tracks):
        v = take(7)
        period = 2 * snap * (1 + int(v[0] * 3))
        width = max(period // 2, 1)
        span = snap * (4 + int(v[1] * (size // (2 * snap))))
        extent = snap * (4 + int(v[2] * (size // (2 * snap))))
        r0 = int(v[3] * max(size - span, 1))
        c0 = int(v[4] * max(size - extent, 1))
        level = IC_PALETTE[int(v[5] * 8) % 8]
        horizontal = v[6] < 0.5
        for k in range(0, span, period):
            if horizontal:
                img[min(r0 + k, size - 1) : min(r0 + k + width, size),
                    c0 : min(c0 + extent, size)] = level
            else:
                img[r0 : min(r0 + extent, size),
                    min(c0 + k, size - 1) : min(c0 + k + width, size)] = level
    return img


def _natural(size: int, seed: int, index: int) -> np.ndarray:
    u = _draws(seed, index, size * size + 1)
    sigma = 2.0 + 6.0 * u[0]
    field = u[1:].reshape(size, size)
    smooth = gaussian_filter(field, sigma, mode="reflect")
    lo, hi = smooth.min(), smooth.max()
    if hi <= lo:
        return np.zeros((size, size), dtype=np.uint8)
    return np.round((smooth - lo) / (hi - lo) * 255.0).astype(np.uint8)


def load_object_dir(path: str, size: int):
    """8-bit grayscale images from a directory, resized if needed."""
    from PIL import Image

    files = sorted(
        f for f in os.listdir(path)
        if f.lower().endswith((".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"))
    )
    if not files:
        raise UnknownClass(f"no images found in {path}")
    images = []
    for f in files:
        img = Image.open(os.path.join(path, f)).convert("L")
        if img.size != (size, size):
            img = img.resize((size, size), Image.BILINEAR)
        images.append(np.asarray(img, dtype=np.uint8))
    return images


def synth_object(kind: str, size: int, seed: int, index: int) -> np.ndarray:
    if kind == "ic-layout":
        return _ic_layout(size, seed, index)
    if kind == "natural":
        return _natural(size, seed, index)
    raise UnknownClass(f"unknown object class {kind!r}")


def synth_objects(kind: str, count: int, seed: int, size: int = 256):
    """Deterministic stream of 8-bit object images."""
    if count < 1:
        raise UnknownClass("count must be at least 1")
    for index in range(count):
        yield synth_object(kind, size, seed, index)
