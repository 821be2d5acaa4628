# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels: the hot per-pixel loops of the pipeline.

Same contracts as ``_pure``; plain C loops instead of vectorized numpy.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, exp, floor

cnp.import_array()

BACKEND = "native"


cdef inline unsigned char _round_u8(double v) nogil:
    v = floor(v + 0.5)
    if v < 0:
        return 0
    if v > 255:
        return 255
    return <unsigned char>v


def box_downscale(cnp.ndarray[cnp.uint8_t, ndim=3] src, double factor):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t ch = src.shape[2]
    cdef Py_ssize_t out_h = <Py_ssize_t>(h / factor)
    cdef Py_ssize_t out_w = <Py_ssize_t>(w / factor)
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] out = np.empty((out_h, out_w, ch), dtype=np.uint8)
    cdef Py_ssize_t oy, ox, c, j, i
    cdef double ylo, yhi, xlo, xhi, wy, wx, acc, norm
    cdef Py_ssize_t y0, y1, x0, x1
    with nogil:
        for oy in range(out_h):
            ylo = oy * factor
            yhi = (oy + 1) * factor
            y0 = <Py_ssize_t>floor(ylo)
            y1 = <Py_ssize_t>ceil(yhi)
            if y1 > h:
                y1 = h
            for ox in range(out_w):
                xlo = ox * factor
                xhi = (ox + 1) * factor
                x0 = <Py_ssize_t>floor(xlo)
                x1 = <Py_ssize_t>ceil(xhi)
                if x1 > w:
                    x1 = w
                for c in range(ch):
                    acc = 0.0
                    norm = 0.0
                    for j in range(y0, y1):
                        wy = (yhi if yhi < j + 1 else j + 1) - (ylo if ylo > j else j)
                        if wy <= 0:
                            continue
                        for i in range(x0, x1):
                            wx = (xhi if xhi < i + 1 else i + 1) - (xlo if xlo > i else i)
                            if wx <= 0:
                                continue
                            acc += wy * wx * src[j, i, c]
                            norm += wy * wx
                    out[oy, ox, c] = _round_u8(acc / norm)
    return out


def warp_affine(cnp.ndarray[cnp.uint8_t, ndim=3] src, inv, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef double a = inv[0]
    cdef double b = inv[1]
    cdef double tx = inv[2]
    cdef double cc = inv[3]
    cdef double d = inv[4]
    cdef double ty = inv[5]
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t ch = src.shape[2]
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] out = np.zeros((out_h, out_w, ch), dtype=np.uint8)
    cdef Py_ssize_t oy, ox, c, x0, y0
    cdef double sx, sy, fx, fy, w00, w01, w10, w11, acc, p
    with nogil:
        for oy in range(out_h):
            for ox in range(out_w):
                sx = a * ox + b * oy + tx
                sy = cc * ox + d * oy + ty
                x0 = <Py_ssize_t>floor(sx)
                y0 = <Py_ssize_t>floor(sy)
                fx = sx - x0
                fy = sy - y0
                w00 = (1 - fx) * (1 - fy)
                w10 = fx * (1 - fy)
                w01 = (1 - fx) * fy
                w11 = fx * fy
                for c in range(ch):
                    acc = 0.0
                    if 0 <= x0 < w and 0 <= y0 < h:
                        acc += w00 * src[y0, x0, c]
                    if 0 <= x0 + 1 < w and 0 <= y0 < h:
                        acc += w10 * src[y0, x0 + 1, c]
                    if 0 <= x0 < w and 0 <= y0 + 1 < h:
                        acc += w01 * src[y0 + 1, x0, c]
                    if 0 <= x0 + 1 < w and 0 <= y0 + 1 < h:
                        acc += w11 * src[y0 + 1, x0 + 1, c]
                    out[oy, ox, c] = _round_u8(acc)
    return out


def gaussian_blur(cnp.ndarray[cnp.uint8_t, ndim=3] src, int radius):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t ch = src.shape[2]
    cdef double sigma = radius / 2.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] k = np.empty(2 * radius + 1, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double ksum = 0.0
    for i in range(2 * radius + 1):
        k[i] = exp(-((i - radius) * (i - radius)) / (2.0 * sigma * sigma))
        ksum += k[i]
    for i in range(2 * radius + 1):
        k[i] /= ksum

    cdef cnp.ndarray[cnp.float64_t, ndim=3] tmp = np.empty((h, w, ch), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] out = np.empty((h, w, ch), dtype=np.uint8)
    cdef Py_ssize_t y, x, c, t, yy, xx
    cdef double acc
    with nogil:
        # Vertical pass with replicated borders.
        for y in range(h):
            for x in range(w):
                for c in range(ch):
                    acc = 0.0
                    for t in range(-radius, radius + 1):
                        yy = y + t
                        if yy < 0:
                            yy = 0
                        elif yy >= h:
                            yy = h - 1
                        acc += k[t + radius] * src[yy, x, c]
                    tmp[y, x, c] = acc
        # Horizontal pass.
        for y in range(h):
            for x in range(w):
                for c in range(ch):
                    acc = 0.0
                    for t in range(-radius, radius + 1):
                        xx = x + t
                        if xx < 0:
                            xx = 0
                        elif xx >= w:
                            xx = w - 1
                        acc += k[t + radius] * tmp[y, xx, c]
                    out[y, x, c] = _round_u8(acc)
    return out
