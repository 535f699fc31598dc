# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: bilateral filter (OpenMP) and Zhang-Suen thinning."""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport ceil, exp

cnp.import_array()

BACKEND_NAME = "native"

DEF LUT_SIZE = 65536
DEF LUT_TMAX = 30.0


def bilateral(values, double spatial_sigma, double range_sigma):
    """Matches kernels.pure.bilateral; range exp uses a 64k interpolated LUT."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t h = v.shape[0]
    cdef Py_ssize_t w = v.shape[1]
    cdef int r = <int>ceil(3.0 * spatial_sigma)
    cdef double inv2s = 1.0 / (2.0 * spatial_sigma * spatial_sigma)
    cdef double inv2r = 1.0 / (2.0 * range_sigma * range_sigma)

    cdef int side = 2 * r + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sw_np = np.empty(side * side, dtype=np.float64)
    cdef double[:] sw = sw_np
    cdef int dy, dx
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            sw[(dy + r) * side + (dx + r)] = exp(-(dx * dx + dy * dy) * inv2s)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] lut_np = np.empty(LUT_SIZE + 1, dtype=np.float64)
    cdef double[:] lut = lut_np
    cdef int i
    cdef double lut_scale = (LUT_SIZE - 1) / LUT_TMAX
    for i in range(LUT_SIZE + 1):
        lut[i] = exp(-(<double>i) / lut_scale)

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef double[:, :] vv = v
    cdef double[:, :] oo = out

    # Separable windowed min/max: a window that is constant outputs its own
    # value exactly (uniform weights), so such pixels skip the inner loops.
    cdef cnp.ndarray[cnp.float64_t, ndim=2] rmin_np = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] rmax_np = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] flat_np = np.empty((h, w), dtype=np.uint8)
    cdef double[:, :] rmin = rmin_np
    cdef double[:, :] rmax = rmax_np
    cdef unsigned char[:, :] flat = flat_np

    cdef Py_ssize_t y, x, ny, nx
    cdef double c, nbv, d, t, fi, wt, num, den, lo, hi
    cdef int y0, y1, x0, x1, ti

    for y in prange(h, nogil=True, schedule='static'):
        for x in range(w):
            x0 = -r if x >= r else -<int>x
            x1 = r if x + r < w else <int>(w - 1 - x)
            lo = vv[y, x + x0]
            hi = lo
            for dx in range(x0 + 1, x1 + 1):
                nbv = vv[y, x + dx]
                if nbv < lo:
                    lo = nbv
                elif nbv > hi:
                    hi = nbv
            rmin[y, x] = lo
            rmax[y, x] = hi
    for y in prange(h, nogil=True, schedule='static'):
        y0 = -r if y >= r else -<int>y
        y1 = r if y + r < h else <int>(h - 1 - y)
        for x in range(w):
            lo = rmin[y + y0, x]
            hi = rmax[y + y0, x]
            for dy in range(y0 + 1, y1 + 1):
                if rmin[y + dy, x] < lo:
                    lo = rmin[y + dy, x]
                if rmax[y + dy, x] > hi:
                    hi = rmax[y + dy, x]
            flat[y, x] = 1 if lo == hi else 0

    for y in prange(h, nogil=True, schedule='static'):
        y0 = -r if y >= r else -<int>y
        y1 = r if y + r < h else <int>(h - 1 - y)
        for x in range(w):
            c = vv[y, x]
            if flat[y, x]:
                oo[y, x] = c
                continue
            x0 = -r if x >= r else -<int>x
            x1 = r if x + r < w else <int>(w - 1 - x)
            num = 0.0
            den = 0.0
            for dy in range(y0, y1 + 1):
                ny = y + dy
                for dx in range(x0, x1 + 1):
                    nx = x + dx
                    nbv = vv[ny, nx]
                    d = nbv - c
                    t = d * d * inv2r
                    if t >= LUT_TMAX:
                        continue
                    fi = t * lut_scale
                    ti = <int>fi
                    fi = fi - ti
                    wt = sw[(dy + r) * side + (dx + r)] * (lut[ti] * (1.0 - fi) + lut[ti + 1] * fi)
                    num = num + wt * nbv
                    den = den + wt
            oo[y, x] = num / den
    return out


cdef inline int _removable(unsigned char[:, :] img, Py_ssize_t y, Py_ssize_t x,
                           Py_ssize_t h, Py_ssize_t w, int sub) nogil:
    cdef int p[8]
    # P2..P9 clockwise from north; out-of-bounds neighbors are background
    p[0] = img[y - 1, x] if y > 0 else 0
    p[1] = img[y - 1, x + 1] if (y > 0 and x + 1 < w) else 0
    p[2] = img[y, x + 1] if x + 1 < w else 0
    p[3] = img[y + 1, x + 1] if (y + 1 < h and x + 1 < w) else 0
    p[4] = img[y + 1, x] if y + 1 < h else 0
    p[5] = img[y + 1, x - 1] if (y + 1 < h and x > 0) else 0
    p[6] = img[y, x - 1] if x > 0 else 0
    p[7] = img[y - 1, x - 1] if (y > 0 and x > 0) else 0
    cdef int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7]
    if b < 2 or b > 6:
        return 0
    cdef int a = 0
    cdef int i
    for i in range(8):
        if p[i] == 0 and p[(i + 1) % 8] == 1:
            a += 1
    if a != 1:
        return 0
    if sub == 0:
        if p[0] * p[2] * p[4] != 0:
            return 0
        if p[2] * p[4] * p[6] != 0:
            return 0
    else:
        if p[0] * p[2] * p[6] != 0:
            return 0
        if p[0] * p[4] * p[6] != 0:
            return 0
    return 1


def zhang_suen_thin(mask):
    """Matches kernels.pure.zhang_suen_thin exactly."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] img = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] flag = np.zeros_like(img)
    cdef unsigned char[:, :] im = img
    cdef unsigned char[:, :] fl = flag
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t y, x
    cdef int sub
    cdef long changed, removed

    while True:
        changed = 0
        for sub in range(2):
            removed = 0
            for y in prange(h, nogil=True, schedule='static'):
                for x in range(w):
                    if im[y, x] == 1 and _removable(im, y, x, h, w, sub):
                        fl[y, x] = 1
                        removed += 1
            if removed > 0:
                changed += removed
                for y in range(h):
                    for x in range(w):
                        if fl[y, x]:
                            im[y, x] = 0
                            fl[y, x] = 0
        if changed == 0:
            return img.astype(bool)
