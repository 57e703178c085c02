"""Numba-compiled loop kernels (the default fast path).

Each function mirrors one in :mod:`numpy_impl`; see the package docstring
for the selection rules.  Compilation results are cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _pad1(x):
    c, h, w = x.shape
    xp = np.zeros((c, h + 2, w + 2), dtype=x.dtype)
    xp[:, 1 : h + 1, 1 : w + 1] = x
    return xp


@njit(cache=True)
def conv3x3(x, w, b):
    c, h, ww = x.shape
    o = w.shape[0]
    xp = _pad1(x)
    out = np.empty((o, h, ww), dtype=x.dtype)
    for oc in range(o):
        bias = b[oc]
        for y in range(h):
            for xx in range(ww):
                out[oc, y, xx] = bias
    for oc in range(o):
        for ic in range(c):
            w00 = w[oc, ic, 0, 0]
            w01 = w[oc, ic, 0, 1]
            w02 = w[oc, ic, 0, 2]
            w10 = w[oc, ic, 1, 0]
            w11 = w[oc, ic, 1, 1]
            w12 = w[oc, ic, 1, 2]
            w20 = w[oc, ic, 2, 0]
            w21 = w[oc, ic, 2, 1]
            w22 = w[oc, ic, 2, 2]
            for y in range(h):
                for xx in range(ww):
                    out[oc, y, xx] += (
                        w00 * xp[ic, y, xx]
                        + w01 * xp[ic, y, xx + 1]
                        + w02 * xp[ic, y, xx + 2]
                        + w10 * xp[ic, y + 1, xx]
                        + w11 * xp[ic, y + 1, xx + 1]
                        + w12 * xp[ic, y + 1, xx + 2]
                        + w20 * xp[ic, y + 2, xx]
                        + w21 * xp[ic, y + 2, xx + 1]
                        + w22 * xp[ic, y + 2, xx + 2]
                    )
    return out


@njit(cache=True)
def maxpool2(x):
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    out = np.empty((c, h2, w2), dtype=x.dtype)
    idx = np.empty((c, h2, w2), dtype=np.uint8)
    for ch in range(c):
        for y in range(h2):
            for xx in range(w2):
                best = x[ch, 2 * y, 2 * xx]
                k = np.uint8(0)
                if x[ch, 2 * y, 2 * xx + 1] > best:
                    best = x[ch, 2 * y, 2 * xx + 1]
                    k = np.uint8(1)
                if x[ch, 2 * y + 1, 2 * xx] > best:
                    best = x[ch, 2 * y + 1, 2 * xx]
                    k = np.uint8(2)
                if x[ch, 2 * y + 1, 2 * xx + 1] > best:
                    best = x[ch, 2 * y + 1, 2 * xx + 1]
                    k = np.uint8(3)
                out[ch, y, xx] = best
                idx[ch, y, xx] = k
    return out, idx


@njit(cache=True)
def maxpool2_vjp(g, idx, in_shape):
    gin = np.zeros(in_shape, dtype=g.dtype)
    c, h2, w2 = g.shape
    for ch in range(c):
        for y in range(h2):
            for xx in range(w2):
                k = idx[ch, y, xx]
                gin[ch, 2 * y + (k >> 1), 2 * xx + (k & 1)] = g[ch, y, xx]
    return gin


@njit(cache=True)
def slic_assign(lab, centers, spacing_weight, window):
    h, w = lab.shape[:2]
    best = np.full((h, w), np.inf)
    labels = np.zeros((h, w), dtype=np.int32)
    for k in range(centers.shape[0]):
        cy = centers[k, 0]
        cx = centers[k, 1]
        cl = centers[k, 2]
        ca = centers[k, 3]
        cb = centers[k, 4]
        y0 = max(int(cy) - window, 0)
        y1 = min(int(cy) + window + 1, h)
        x0 = max(int(cx) - window, 0)
        x1 = min(int(cx) + window + 1, w)
        for y in range(y0, y1):
            for xx in range(x0, x1):
                dlab = np.sqrt(
                    (lab[y, xx, 0] - cl) ** 2
                    + (lab[y, xx, 1] - ca) ** 2
                    + (lab[y, xx, 2] - cb) ** 2
                )
                dxy = np.sqrt((y - cy) ** 2 + (xx - cx) ** 2)
                d = dlab + spacing_weight * dxy
                if d < best[y, xx]:
                    best[y, xx] = d
                    labels[y, xx] = k
    return labels, best


@njit(cache=True)
def slic_accumulate(lab, labels, k):
    sums = np.zeros((k, 5), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    h, w = labels.shape
    for y in range(h):
        for xx in range(w):
            c = labels[y, xx]
            sums[c, 0] += y
            sums[c, 1] += xx
            sums[c, 2] += lab[y, xx, 0]
            sums[c, 3] += lab[y, xx, 1]
            sums[c, 4] += lab[y, xx, 2]
            counts[c] += 1
    return sums, counts


@njit(cache=True)
def label_components(labels):
    h, w = labels.shape
    comp = np.full((h, w), -1, dtype=np.int32)
    stack = np.empty(h * w, dtype=np.int64)
    cid = 0
    for sy in range(h):
        for sx in range(w):
            if comp[sy, sx] >= 0:
                continue
            val = labels[sy, sx]
            comp[sy, sx] = cid
            stack[0] = sy * w + sx
            top = 1
            while top > 0:
                top -= 1
                pos = stack[top]
                y = pos // w
                x = pos % w
                if y > 0 and comp[y - 1, x] < 0 and labels[y - 1, x] == val:
                    comp[y - 1, x] = cid
                    stack[top] = pos - w
                    top += 1
                if y < h - 1 and comp[y + 1, x] < 0 and labels[y + 1, x] == val:
                    comp[y + 1, x] = cid
                    stack[top] = pos + w
                    top += 1
                if x > 0 and comp[y, x - 1] < 0 and labels[y, x - 1] == val:
                    comp[y, x - 1] = cid
                    stack[top] = pos - 1
                    top += 1
                if x < w - 1 and comp[y, x + 1] < 0 and labels[y, x + 1] == val:
                    comp[y, x + 1] = cid
                    stack[top] = pos + 1
                    top += 1
            cid += 1
    return comp
