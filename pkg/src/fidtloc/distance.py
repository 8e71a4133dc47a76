"""Exact Euclidean distance transform of a point set.

The fast path is the separable lower-envelope-of-parabolas transform
(Felzenszwalb & Huttenlocher): one 1-D pass down every column, one across
every row, both over squared distances, then a square root.
"""
import numba
import numpy as np

from .types import PointSet

_INF = np.inf


@numba.njit(cache=True, nogil=True)
def _envelope_1d(f, out, v, z):
    # f: squared distances along one line (inf = no seed); out receives the envelope.
    n = f.shape[0]
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == _INF:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -_INF
            z[1] = _INF
            continue
        while True:
            p = v[k]
            s = ((fq + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        z[k] = s if k > 0 else -_INF
        z[k + 1] = _INF
    if k < 0:
        for q in range(n):
            out[q] = _INF
        return
    j = 0
    for q in range(n):
        while z[j + 1] < q:
            j += 1
        d = q - v[j]
        out[q] = d * d + f[v[j]]


@numba.njit(cache=True, nogil=True)
def _squared_edt(seeds):
    h, w = seeds.shape
    grid = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            grid[r, c] = 0.0 if seeds[r, c] else _INF
    n = max(h, w)
    buf = np.empty(n)
    line = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for c in range(w):
        for r in range(h):
            line[r] = grid[r, c]
        _envelope_1d(line[:h], buf[:h], v, z)
        for r in range(h):
            grid[r, c] = buf[r]
    for r in range(h):
        _envelope_1d(grid[r].copy(), buf[:w], v, z)
        for c in range(w):
            grid[r, c] = buf[c]
    return grid


def empty_sentinel(width, height):
    """Fill value for a point set with no annotations: the grid diagonal."""
    return float(np.hypot(width, height))


def seed_mask(annotations: PointSet) -> np.ndarray:
    mask = np.zeros(annotations.shape, dtype=np.bool_)
    px = annotations.pixels()
    mask[px[:, 1], px[:, 0]] = True
    return mask


def distance_transform(annotations: PointSet) -> np.ndarray:
    """Distance from every pixel centre to the nearest (rounded) annotation.

    Returns an ``(image_height, image_width)`` float64 array. An empty point
    set yields a map filled with the grid diagonal.
    """
    if len(annotations) == 0:
        return np.full(annotations.shape, empty_sentinel(annotations.image_width, annotations.image_height))
    return np.sqrt(_squared_edt(seed_mask(annotations)))


def distance_transform_bruteforce(annotations: PointSet) -> np.ndarray:
    """Direct per-pixel minimum over all annotations. O(H*W*N); test oracle."""
    h, w = annotations.shape
    if len(annotations) == 0:
        return np.full((h, w), empty_sentinel(w, h))
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    best = np.full((h, w), np.inf)
    for x, y in annotations.pixels():
        np.minimum(best, (cols - x) ** 2 + (rows - y) ** 2, out=best)
    return np.sqrt(best)
