"""SLIC superpixels: localized k-means over (L, a, b, y, x).

Cluster distance is d_lab + (compactness / S) * d_xy with S the expected
segment spacing sqrt(H*W/K).  Centers start on a regular grid, are nudged
to the lowest-gradient pixel in their 3x3 neighborhood, and are refined
for a fixed 10 iterations; stray components are then merged into their
largest adjacent segment so every final segment is 4-connected.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DegeneratePartitionError
from .imagecore import ImageTensor, RegionPartition

N_ITERATIONS = 10

# sRGB (D65) to XYZ
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(data: np.ndarray) -> np.ndarray:
    """Convert [0, 1] sRGB pixels to CIE Lab (D65 white point)."""
    srgb = np.asarray(data, dtype=np.float64)
    linear = np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T / _WHITE
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def slic_superpixels(image: ImageTensor, segment_count: int, compactness: float) -> RegionPartition:
    """Partition an image into roughly ``segment_count`` superpixels."""
    if segment_count < 2:
        raise ValueError("segment_count must be >= 2")
    if compactness <= 0:
        raise ValueError("compactness must be > 0")
    h, w = image.height, image.width
    if segment_count > h * w:
        raise DegeneratePartitionError(
            f"cannot form {segment_count} segments from {h * w} pixels"
        )

    lab = np.ascontiguousarray(rgb_to_lab(image.data))
    spacing = np.sqrt(h * w / segment_count)
    centers = _seed_centers(lab, segment_count, spacing)
    window = max(int(round(2.0 * spacing)), 1)
    weight = compactness / spacing

    labels = np.zeros((h, w), dtype=np.int32)
    for _ in range(N_ITERATIONS):
        labels, best = kernels.slic_assign(lab, centers, weight, window)
        labels = _assign_uncovered(lab, centers, weight, labels, best)
        sums, counts = kernels.slic_accumulate(lab, labels, centers.shape[0])
        occupied = counts > 0
        centers[occupied] = sums[occupied] / counts[occupied, None]

    _, dense = np.unique(labels, return_inverse=True)
    labels = dense.reshape(h, w).astype(np.int32)
    labels = _enforce_connectivity(labels)
    _, dense = np.unique(labels, return_inverse=True)
    labels = dense.reshape(h, w).astype(np.int32)
    return RegionPartition(labels, int(labels.max()) + 1)


def _seed_centers(lab: np.ndarray, segment_count: int, spacing: float) -> np.ndarray:
    """Regular grid of seeds, each moved to the flattest nearby pixel."""
    h, w = lab.shape[:2]
    ny = max(1, int(round(h / spacing)))
    nx = max(1, int(round(w / spacing)))
    while nx * ny < segment_count:
        if h / ny > w / nx:
            ny += 1
        else:
            nx += 1

    grad = _gradient_magnitude(lab)
    centers = np.empty((ny * nx, 5), dtype=np.float64)
    k = 0
    for i in range(ny):
        for j in range(nx):
            y = min(int((i + 0.5) * h / ny), h - 1)
            x = min(int((j + 0.5) * w / nx), w - 1)
            y, x = _lowest_gradient_neighbor(grad, y, x)
            centers[k] = (y, x, lab[y, x, 0], lab[y, x, 1], lab[y, x, 2])
            k += 1
    return centers


def _gradient_magnitude(lab: np.ndarray) -> np.ndarray:
    """Squared Lab gradient with edge-clamped central differences."""
    up = lab[np.maximum(np.arange(lab.shape[0]) - 1, 0)]
    down = lab[np.minimum(np.arange(lab.shape[0]) + 1, lab.shape[0] - 1)]
    left = lab[:, np.maximum(np.arange(lab.shape[1]) - 1, 0)]
    right = lab[:, np.minimum(np.arange(lab.shape[1]) + 1, lab.shape[1] - 1)]
    return ((down - up) ** 2).sum(axis=2) + ((right - left) ** 2).sum(axis=2)


def _lowest_gradient_neighbor(grad: np.ndarray, y: int, x: int) -> tuple[int, int]:
    h, w = grad.shape
    y0, y1 = max(y - 1, 0), min(y + 2, h)
    x0, x1 = max(x - 1, 0), min(x + 2, w)
    patch = grad[y0:y1, x0:x1]
    flat = int(np.argmin(patch))  # first minimum in raster order
    return y0 + flat // patch.shape[1], x0 + flat % patch.shape[1]


def _assign_uncovered(lab, centers, weight, labels, best) -> np.ndarray:
    """Pixels outside every search window get the globally nearest center."""
    missing = ~np.isfinite(best)
    if not missing.any():
        return labels
    ys, xs = np.nonzero(missing)
    pix = lab[ys, xs]  # (M, 3)
    dlab = np.sqrt(((pix[:, None, :] - centers[None, :, 2:]) ** 2).sum(axis=2))
    dxy = np.sqrt(
        (ys[:, None] - centers[None, :, 0]) ** 2 + (xs[:, None] - centers[None, :, 1]) ** 2
    )
    labels = labels.copy()
    labels[ys, xs] = np.argmin(dlab + weight * dxy, axis=1)
    return labels


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Merge every non-largest component of each label into the largest
    adjacent segment (by current pixel count) until all segments are
    4-connected."""
    labels = labels.copy()
    h, w = labels.shape
    initial_components = None
    for _ in range(h * w):  # strictly decreasing component count bounds this
        comp = kernels.label_components(labels)
        n_comp = int(comp.max()) + 1
        if initial_components is None:
            initial_components = n_comp
        flat_comp = comp.ravel()
        flat_lab = labels.ravel()
        comp_label = np.empty(n_comp, dtype=np.int64)
        comp_label[flat_comp] = flat_lab
        comp_sizes = np.bincount(flat_comp, minlength=n_comp)
        label_sizes = np.bincount(flat_lab)

        # keeper per label: largest component, ties to the lowest component id
        order = np.lexsort((np.arange(n_comp), -comp_sizes, comp_label))
        keeper = np.zeros(n_comp, dtype=bool)
        seen: set[int] = set()
        for cid in order:
            lbl = int(comp_label[cid])
            if lbl not in seen:
                seen.add(lbl)
                keeper[cid] = True
        orphans = np.nonzero(~keeper)[0]
        if orphans.size == 0:
            break

        pixel_order = np.argsort(flat_comp, kind="stable")
        bounds = np.searchsorted(flat_comp[pixel_order], np.arange(n_comp + 1))
        for cid in orphans:
            pixels = pixel_order[bounds[cid] : bounds[cid + 1]]
            own = int(flat_lab[pixels[0]])
            neighbor_labels = _neighbor_labels(flat_lab, pixels, h, w, own)
            if neighbor_labels.size == 0:
                continue
            counts = label_sizes[neighbor_labels]
            best = neighbor_labels[np.lexsort((neighbor_labels, -counts))[0]]
            flat_lab[pixels] = best
            label_sizes[own] -= pixels.size
            label_sizes[best] += pixels.size
    return labels


def _neighbor_labels(flat_lab, pixels, h, w, own) -> np.ndarray:
    ys, xs = pixels // w, pixels % w
    gathered = []
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny, nx = ys + dy, xs + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        gathered.append(flat_lab[ny[ok] * w + nx[ok]])
    values = np.unique(np.concatenate(gathered))
    return values[values != own]
