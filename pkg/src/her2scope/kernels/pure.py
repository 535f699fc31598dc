"""Pure numpy implementations of the hot kernels.

These are the reference implementations; the compiled extension in
``_native`` must match them (bilateral within float tolerance, thinning
exactly).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "pure"


def bilateral(values: np.ndarray, spatial_sigma: float, range_sigma: float) -> np.ndarray:
    """Edge-preserving smoothing: Gaussian space x Gaussian range weights.

    Window radius is ceil(3 * spatial_sigma); border pixels renormalize over
    the in-bounds part of their window.
    """
    v = np.asarray(values, dtype=np.float64)
    h, w = v.shape
    r = math.ceil(3.0 * spatial_sigma)
    inv2s = 1.0 / (2.0 * spatial_sigma * spatial_sigma)
    inv2r = 1.0 / (2.0 * range_sigma * range_sigma)
    num = np.zeros_like(v)
    den = np.zeros_like(v)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            sw = math.exp(-(dx * dx + dy * dy) * inv2s)
            y0, y1 = max(0, -dy), h - max(0, dy)
            x0, x1 = max(0, -dx), w - max(0, dx)
            if y0 >= y1 or x0 >= x1:
                continue
            nb = v[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
            c = v[y0:y1, x0:x1]
            wt = sw * np.exp(-((nb - c) ** 2) * inv2r)
            num[y0:y1, x0:x1] += wt * nb
            den[y0:y1, x0:x1] += wt
    return num / den


def _neighbors(padded: np.ndarray):
    """P2..P9 clockwise from north, for the unpadded interior."""
    p2 = padded[:-2, 1:-1]
    p3 = padded[:-2, 2:]
    p4 = padded[1:-1, 2:]
    p5 = padded[2:, 2:]
    p6 = padded[2:, 1:-1]
    p7 = padded[2:, :-2]
    p8 = padded[1:-1, :-2]
    p9 = padded[:-2, :-2]
    return p2, p3, p4, p5, p6, p7, p8, p9


def zhang_suen_thin(mask: np.ndarray) -> np.ndarray:
    """Iterative two-subpass thinning until no pixel is removable."""
    img = np.ascontiguousarray(mask, dtype=np.uint8)
    while True:
        changed = False
        for sub in (0, 1):
            padded = np.pad(img, 1)
            p2, p3, p4, p5, p6, p7, p8, p9 = _neighbors(padded)
            ring = (p2, p3, p4, p5, p6, p7, p8, p9)
            b = sum(int_arr.astype(np.int8) for int_arr in ring)
            a = np.zeros_like(b)
            for i in range(8):
                a += ((ring[i] == 0) & (ring[(i + 1) % 8] == 1)).astype(np.int8)
            if sub == 0:
                c1 = p2 * p4 * p6 == 0
                c2 = p4 * p6 * p8 == 0
            else:
                c1 = p2 * p4 * p8 == 0
                c2 = p2 * p6 * p8 == 0
            remove = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & c1 & c2
            if remove.any():
                img[remove] = 0
                changed = True
        if not changed:
            return img.astype(bool)
