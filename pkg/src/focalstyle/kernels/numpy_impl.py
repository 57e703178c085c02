"""Vectorized numpy fallbacks for the hot kernels.

These trade memory for BLAS throughput (the convolution materializes an
im2col view); the numba implementations in :mod:`numba_impl` are the
memory-lean loop versions of the same operations.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage


def conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 convolution with zero padding 1 and stride 1.

    x: (C, H, W), w: (O, C, 3, 3), b: (O,).  Returns (O, H, W).
    """
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (C, H, W, 3, 3)
    out = np.tensordot(w, win, axes=[(1, 2, 3), (0, 3, 4)])
    out += b[:, None, None]
    return np.ascontiguousarray(out)


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling with stride 2 (floor geometry for odd sizes).

    Returns the pooled map and a uint8 index map encoding which corner of
    each window won (2*dy + dx, first maximum on ties).
    """
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    v = x[:, : h2 * 2, : w2 * 2].reshape(c, h2, 2, w2, 2)
    v = v.transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    idx = v.argmax(axis=3)
    out = np.take_along_axis(v, idx[..., None], axis=3)[..., 0]
    return np.ascontiguousarray(out), idx.astype(np.uint8)


def maxpool2_vjp(g: np.ndarray, idx: np.ndarray, in_shape: tuple[int, int, int]) -> np.ndarray:
    """Scatter pooled-output gradients back to the pre-pooling positions."""
    c, _, _ = in_shape
    h2, w2 = g.shape[1], g.shape[2]
    gin = np.zeros(in_shape, dtype=g.dtype)
    dy = (idx >> 1).astype(np.intp)
    dx = (idx & 1).astype(np.intp)
    cy = np.arange(h2, dtype=np.intp)[None, :, None] * 2 + dy
    cx = np.arange(w2, dtype=np.intp)[None, None, :] * 2 + dx
    cc = np.arange(c, dtype=np.intp)[:, None, None]
    gin[cc, cy, cx] = g  # each pooled element maps to a unique input position
    return gin


def slic_assign(
    lab: np.ndarray,
    centers: np.ndarray,
    spacing_weight: float,
    window: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Assign each pixel to the nearest cluster center within its window.

    lab: (H, W, 3) Lab image; centers: (K, 5) rows of (y, x, L, a, b).
    Distance is d_lab + spacing_weight * d_xy, ties broken by the lowest
    center index.  Returns (labels int32, best distances float64).
    """
    h, w = lab.shape[:2]
    best = np.full((h, w), np.inf)
    labels = np.zeros((h, w), dtype=np.int32)
    for k in range(centers.shape[0]):
        cy, cx, cl, ca, cb = centers[k]
        y0 = max(int(cy) - window, 0)
        y1 = min(int(cy) + window + 1, h)
        x0 = max(int(cx) - window, 0)
        x1 = min(int(cx) + window + 1, w)
        if y0 >= y1 or x0 >= x1:
            continue
        sub = lab[y0:y1, x0:x1]
        dlab = np.sqrt(
            (sub[..., 0] - cl) ** 2 + (sub[..., 1] - ca) ** 2 + (sub[..., 2] - cb) ** 2
        )
        yy = np.arange(y0, y1, dtype=np.float64)[:, None]
        xx = np.arange(x0, x1, dtype=np.float64)[None, :]
        dxy = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
        d = dlab + spacing_weight * dxy
        sub_best = best[y0:y1, x0:x1]
        upd = d < sub_best
        sub_best[upd] = d[upd]
        labels[y0:y1, x0:x1][upd] = k
    return labels, best


def slic_accumulate(lab: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster sums of (y, x, L, a, b) and pixel counts."""
    flat = labels.ravel()
    h, w = labels.shape
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sums = np.empty((k, 5), dtype=np.float64)
    sums[:, 0] = np.bincount(flat, weights=ys.ravel(), minlength=k)
    sums[:, 1] = np.bincount(flat, weights=xs.ravel(), minlength=k)
    for ch in range(3):
        sums[:, 2 + ch] = np.bincount(flat, weights=lab[..., ch].ravel(), minlength=k)
    counts = np.bincount(flat, minlength=k).astype(np.int64)
    return sums, counts


def label_components(labels: np.ndarray) -> np.ndarray:
    """4-connected components of equal-label pixels, numbered densely in
    order of first raster occurrence."""
    comp = np.full(labels.shape, -1, dtype=np.int32)
    offset = 0
    for val in np.unique(labels):
        mask = labels == val
        sub, n = ndimage.label(mask)  # default structure is 4-connectivity
        comp[mask] = sub[mask] + offset - 1
        offset += n
    # renumber by first raster occurrence so numbering matches the loop impl
    _, first = np.unique(comp.ravel(), return_index=True)
    order = np.argsort(np.argsort(first))
    remap = np.empty(offset, dtype=np.int32)
    remap[np.unique(comp.ravel())] = order.astype(np.int32)
    return remap[comp]
