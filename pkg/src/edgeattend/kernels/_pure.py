"""Pure-Python (numpy) pixel kernels.

Fallback used when the compiled extension is unavailable. Every function
here has a signature-identical twin in ``_native.pyx``; the test suite
cross-checks the two backends against each other.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

BACKEND = "pure"


def _to_u8(acc: np.ndarray) -> np.ndarray:
    # Half-up rounding, matching the compiled kernel.
    return np.clip(np.floor(acc + 0.5), 0, 255).astype(np.uint8)


def _box_weights(n_in: int, n_out: int, factor: float) -> np.ndarray:
    """Row-stochastic matrix of fractional box coverages for 1-D area averaging."""
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        lo = i * factor
        hi = (i + 1) * factor
        j0 = int(math.floor(lo))
        j1 = min(int(math.ceil(hi)), n_in)
        for j in range(j0, j1):
            cover = min(hi, j + 1.0) - max(lo, float(j))
            if cover > 0.0:
                w[i, j] = cover
    return w / w.sum(axis=1, keepdims=True)


def box_downscale(src: np.ndarray, factor: float) -> np.ndarray:
    """Area-average resample of an (h, w, c) uint8 array by ``factor`` > 1."""
    h, w = src.shape[:2]
    out_h = int(h / factor)
    out_w = int(w / factor)
    wy = _box_weights(h, out_h, factor)
    wx = _box_weights(w, out_w, factor)
    acc = np.einsum("oi,ijc,pj->opc", wy, src.astype(np.float64), wx, optimize=True)
    return _to_u8(acc)


def warp_affine(src: np.ndarray, inv: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Affine warp with bilinear sampling; samples outside the source read 0.

    ``inv`` is the output->source map as (a, b, tx, c, d, ty):
    sx = a*ox + b*oy + tx, sy = c*ox + d*oy + ty.
    """
    a, b, tx, c, d, ty = (float(v) for v in inv)
    h, w = src.shape[:2]
    ch = src.shape[2]
    oy, ox = np.mgrid[0:out_h, 0:out_w]
    sx = a * ox + b * oy + tx
    sy = c * ox + d * oy + ty
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    acc = np.zeros((out_h, out_w, ch), dtype=np.float64)
    flat = src.reshape(-1, ch).astype(np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            idx = np.clip(yi, 0, h - 1) * w + np.clip(xi, 0, w - 1)
            px = flat[idx.ravel()].reshape(out_h, out_w, ch)
            acc += (wgt * valid)[..., None] * px
    return _to_u8(acc)


def gaussian_kernel(radius: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps over [-radius, radius] with sigma = radius/2."""
    sigma = radius / 2.0
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(src: np.ndarray, radius: int) -> np.ndarray:
    """Separable Gaussian blur with replicated borders on an (h, w, c) uint8 array."""
    k = gaussian_kernel(radius)
    acc = src.astype(np.float64)
    acc = ndimage.correlate1d(acc, k, axis=0, mode="nearest")
    acc = ndimage.correlate1d(acc, k, axis=1, mode="nearest")
    return _to_u8(acc)
