"""Occlusion-based importance maps.

A region's importance is how much the classifier's output distribution
moves (L2) when the region is filled with a flat color.  Raw per-pixel
score maps from one or more partitions are averaged, then rescaled to a
configurable [alpha_min, alpha_max] band to form the stylization-strength
mask: high scores mean "preserve content here".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends.base import ClassifierBackend
from .errors import ConfigurationError, ImageFormatError
from .imagecore import AlphaMap, ImageTensor, RegionPartition
from .slic import slic_superpixels

METHODS = ("patch", "patch-averaged", "superpixel", "segmentation")

DEFAULT_SUPERPIXEL_PARAMS = ((50, 10.0), (100, 10.0), (200, 20.0))
DEFAULT_ALPHA_MIN = 1.0
DEFAULT_ALPHA_MAX = 100.0
_BATCH = 16


@dataclass(frozen=True)
class RegionScore:
    """Importance of one region of a partition."""

    label: int
    pixel_count: int
    score: float


@dataclass(frozen=True)
class MaskMethodConfig:
    """How to build the strength mask for one image."""

    method: str = "patch-averaged"
    patch_size: int | None = None
    grid_shifts: tuple[tuple[int, int], ...] | None = None
    superpixel_params: tuple[tuple[int, float], ...] | None = None
    fill_color: tuple[float, float, float] | None = None
    alpha_min: float = DEFAULT_ALPHA_MIN
    alpha_max: float = DEFAULT_ALPHA_MAX

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(
                f"unknown mask method {self.method!r}; expected one of {METHODS}"
            )
        if self.patch_size is not None and self.patch_size < 1:
            raise ConfigurationError("patch_size must be >= 1")
        if not self.alpha_max >= self.alpha_min:
            raise ConfigurationError("alpha_max must be >= alpha_min")
        if self.fill_color is not None:
            fill = tuple(float(v) for v in self.fill_color)
            if len(fill) != 3 or any(not 0.0 <= v <= 1.0 for v in fill):
                raise ConfigurationError("fill_color must be three values in [0, 1]")
            object.__setattr__(self, "fill_color", fill)
        for n, c in self.superpixel_params or ():
            if n < 2 or c <= 0:
                raise ConfigurationError(
                    "superpixel_params entries must be (count >= 2, compactness > 0)"
                )

    def resolved_patch_size(self, image: ImageTensor) -> int:
        if self.patch_size is not None:
            return self.patch_size
        return max(1, min(image.height, image.width) // 8)

    def resolved_shifts(self, patch_size: int) -> tuple[tuple[int, int], ...]:
        if self.grid_shifts is not None:
            return self.grid_shifts
        half = patch_size // 2
        return tuple(dict.fromkeys(((0, 0), (half, 0), (0, half), (half, half))))

    def resolved_superpixel_params(self) -> tuple[tuple[int, float], ...]:
        return self.superpixel_params or DEFAULT_SUPERPIXEL_PARAMS

    def resolved_fill(self, image: ImageTensor) -> np.ndarray:
        if self.fill_color is not None:
            return np.asarray(self.fill_color, dtype=np.float64)
        return image.data.reshape(-1, 3).mean(axis=0)


def patch_partition(image: ImageTensor, patch_size: int, shift: tuple[int, int] = (0, 0)) -> RegionPartition:
    """Axis-aligned grid of ``patch_size`` squares, offset by ``shift``.

    A nonzero shift leaves partial patches along the top/left edges; every
    cell, partial or full, is its own region.
    """
    h, w = image.height, image.width
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    if patch_size > h and patch_size > w:
        raise ValueError(f"patch_size {patch_size} exceeds both image dimensions {h}x{w}")
    dy, dx = shift
    if not (0 <= dy < patch_size and 0 <= dx < patch_size):
        raise ValueError("shift components must lie in [0, patch_size)")

    row_edges = np.arange(dy % patch_size or patch_size, h, patch_size)
    col_edges = np.arange(dx % patch_size or patch_size, w, patch_size)
    row_idx = np.digitize(np.arange(h), row_edges)
    col_idx = np.digitize(np.arange(w), col_edges)
    labels = (row_idx[:, None] * (len(col_edges) + 1) + col_idx[None, :]).astype(np.int32)
    return RegionPartition(labels, int(labels.max()) + 1)


def occlude(image: ImageTensor, partition: RegionPartition, label: int, fill: np.ndarray) -> ImageTensor:
    """Copy of the image with one region painted a flat color."""
    data = np.array(image.data)
    data[partition.labels == label] = np.asarray(fill, dtype=np.float64)
    return ImageTensor(data)


def score_regions(
    backend: ClassifierBackend,
    image: ImageTensor,
    partition: RegionPartition,
    fill: np.ndarray,
) -> list[RegionScore]:
    """Occlusion importance for every region of a partition."""
    reference = backend.classify(image).probabilities
    pixel_counts = np.bincount(partition.labels.ravel(), minlength=partition.region_count)
    scores: list[RegionScore] = []
    labels = list(range(partition.region_count))
    for start in range(0, len(labels), _BATCH):
        chunk = labels[start : start + _BATCH]
        occluded = [occlude(image, partition, lbl, fill) for lbl in chunk]
        dists = backend.classify_batch(occluded)
        for lbl, dist in zip(chunk, dists):
            delta = float(np.linalg.norm(dist.probabilities - reference))
            scores.append(RegionScore(lbl, int(pixel_counts[lbl]), delta))
    return scores


def scores_to_mask(partition: RegionPartition, scores: list[RegionScore]) -> AlphaMap:
    """Paint each region with its raw (unnormalized) score."""
    lut = np.full(partition.region_count, np.nan, dtype=np.float64)
    for s in scores:
        if not 0 <= s.label < partition.region_count:
            raise ValueError(f"score references unknown region {s.label}")
        lut[s.label] = s.score
    if np.isnan(lut).any():
        missing = int(np.nonzero(np.isnan(lut))[0][0])
        raise ValueError(f"no score provided for region {missing}")
    return AlphaMap(lut[partition.labels].astype(np.float32))


def average_masks(masks: list[AlphaMap]) -> AlphaMap:
    """Pixelwise mean of same-shape maps."""
    if not masks:
        raise ValueError("need at least one mask to average")
    shape = masks[0].data.shape
    for m in masks[1:]:
        if m.data.shape != shape:
            raise ValueError(f"mask shapes differ: {shape} vs {m.data.shape}")
    stacked = np.stack([m.data.astype(np.float64) for m in masks])
    return AlphaMap(stacked.mean(axis=0).astype(np.float32))


def normalize_mask(mask: AlphaMap, alpha_min: float, alpha_max: float) -> AlphaMap:
    """Min-max rescale into [alpha_min, alpha_max].

    A flat input (range below 1e-9) maps to the midpoint of the band.
    """
    if not alpha_max >= alpha_min:
        raise ValueError("alpha_max must be >= alpha_min")
    data = mask.data.astype(np.float64)
    lo, hi = float(data.min()), float(data.max())
    if hi - lo < 1e-9:
        t = np.full_like(data, 0.5)
    else:
        t = (data - lo) / (hi - lo)
    out = alpha_min * (1.0 - t) + alpha_max * t
    return AlphaMap(out.astype(np.float32))


def segmentation_refine(mask: AlphaMap, segmentation: RegionPartition) -> AlphaMap:
    """Replace each segment's values with the segment mean."""
    if mask.data.shape != segmentation.labels.shape:
        raise ValueError(
            f"mask {mask.data.shape} and segmentation {segmentation.labels.shape} differ in shape"
        )
    flat = segmentation.labels.ravel()
    sums = np.bincount(flat, weights=mask.data.ravel().astype(np.float64), minlength=segmentation.region_count)
    counts = np.bincount(flat, minlength=segmentation.region_count)
    means = sums / np.maximum(counts, 1)
    return AlphaMap(means[segmentation.labels].astype(np.float32))


def generate_mask(
    backend: ClassifierBackend,
    image: ImageTensor,
    config: MaskMethodConfig,
    segmentation: RegionPartition | None = None,
) -> tuple[AlphaMap, list[RegionScore]]:
    """Build the normalized strength mask for one image.

    Returns the mask plus the region scores of the last partition scored
    (for reporting).  ``segmentation`` is required by — and only valid
    for — the ``segmentation`` method.
    """
    if config.method == "segmentation":
        if segmentation is None:
            raise ConfigurationError("the segmentation method requires a segmentation map")
    elif segmentation is not None:
        raise ConfigurationError(
            f"a segmentation map was supplied but method is {config.method!r}"
        )

    fill = config.resolved_fill(image)
    raw_maps: list[AlphaMap] = []
    scores: list[RegionScore] = []

    if config.method == "patch":
        ps = config.resolved_patch_size(image)
        part = patch_partition(image, ps)
        scores = score_regions(backend, image, part, fill)
        raw_maps.append(scores_to_mask(part, scores))
    elif config.method in ("patch-averaged", "segmentation"):
        ps = config.resolved_patch_size(image)
        for shift in config.resolved_shifts(ps):
            part = patch_partition(image, ps, shift)
            scores = score_regions(backend, image, part, fill)
            raw_maps.append(scores_to_mask(part, scores))
    else:  # superpixel
        for count, compactness in config.resolved_superpixel_params():
            part = slic_superpixels(image, count, compactness)
            scores = score_regions(backend, image, part, fill)
            raw_maps.append(scores_to_mask(part, scores))

    averaged = average_masks(raw_maps)
    if config.method == "segmentation":
        averaged = segmentation_refine(averaged, segmentation)
    return normalize_mask(averaged, config.alpha_min, config.alpha_max), scores


def load_segmentation(path) -> RegionPartition:
    """Read a grayscale PNG where equal pixel values mean one segment."""
    from PIL import Image

    with Image.open(path) as img:
        if img.mode not in ("L", "I", "I;16", "P", "1"):
            raise ImageFormatError(
                f"segmentation map must be grayscale, got mode {img.mode!r}"
            )
        arr = np.asarray(img.convert("I"), dtype=np.int64)
    _, dense = np.unique(arr, return_inverse=True)
    labels = dense.reshape(arr.shape).astype(np.int32)
    return RegionPartition(labels, int(labels.max()) + 1)
