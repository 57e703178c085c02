"""Core image and mask types, file I/O, and resampling.

Pixel data lives in [0, 1] RGB float64 at every module boundary; backends
apply their own normalization internally.  Alpha maps are float32 because
their on-disk format is 32-bit and the write/read round trip must be
bit-exact.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError

ALPHAMAP_MAGIC = b"ALPH"
ALPHAMAP_VERSION = 1
_ALPHAMAP_HEADER = struct.Struct("<4sIII")  # magic, version, width, height


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageTensor:
    """An H x W x 3 RGB image with values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        # Private copy: freezing must never flip the caller's buffer read-only.
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"image must have shape (H, W, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.isfinite(arr).all():
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AlphaMap:
    """An H x W map of per-pixel content-preservation weights (float32)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, order="C")
        if arr.ndim != 2:
            raise ValueError(f"alpha map must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("alpha map must be at least 1x1")
        if not np.isfinite(arr).all():
            raise ValueError("alpha map contains non-finite values")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RegionPartition:
    """An H x W label map assigning every pixel to exactly one region.

    Labels are dense: every value in [0, region_count) occurs at least once.
    """

    labels: np.ndarray
    region_count: int

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int32, order="C")
        if arr.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {arr.shape}")
        if self.region_count < 1:
            raise ValueError("region_count must be >= 1")
        counts = np.bincount(arr.ravel(), minlength=self.region_count)
        if arr.min() < 0 or arr.max() >= self.region_count:
            raise ValueError("labels must lie in [0, region_count)")
        if len(counts) > self.region_count or (counts == 0).any():
            raise ValueError("every label in [0, region_count) must occur")
        object.__setattr__(self, "labels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def load_image(path: str | Path) -> ImageTensor:
    """Load a PNG or JPEG file as an RGB ImageTensor in [0, 1].

    Grayscale images are replicated across the three channels and any
    alpha channel is discarded.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in ("PNG", "JPEG"):
                raise ImageFormatError(f"unsupported image format {fmt!r}: {path}")
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"not a recognized image file: {path}") from exc
    return ImageTensor(arr)


def save_image(image: ImageTensor, path: str | Path) -> None:
    """Write an ImageTensor as an 8-bit PNG (value v stored as round(v*255))."""
    quantized = np.rint(image.data * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="RGB").save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def save_mask_png(mask: AlphaMap, path: str | Path) -> None:
    """Write a min-max stretched 8-bit grayscale visualization of a mask."""
    data = mask.data.astype(np.float64)
    lo, hi = float(data.min()), float(data.max())
    if hi - lo < 1e-12:
        stretched = np.full(data.shape, 0.5)
    else:
        stretched = (data - lo) / (hi - lo)
    quantized = np.rint(stretched * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="L").save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def write_alphamap(mask: AlphaMap, path: str | Path) -> None:
    """Write a mask in the binary ``.alphamap`` format (bit-exact round trip).

    Layout: magic ``ALPH``, then version, width, and height as 32-bit
    little-endian unsigned integers, then height*width IEEE-754 32-bit
    little-endian floats in row-major order.
    """
    header = _ALPHAMAP_HEADER.pack(ALPHAMAP_MAGIC, ALPHAMAP_VERSION, mask.width, mask.height)
    payload = mask.data.astype("<f4", copy=False).tobytes(order="C")
    _atomic_write_bytes(path, header + payload)


def read_alphamap(path: str | Path) -> AlphaMap:
    """Read a mask written by :func:`write_alphamap`."""
    raw = Path(path).read_bytes()
    if len(raw) < _ALPHAMAP_HEADER.size:
        raise ImageFormatError(f"alphamap file too short: {path}")
    magic, version, width, height = _ALPHAMAP_HEADER.unpack_from(raw)
    if magic != ALPHAMAP_MAGIC:
        raise ImageFormatError(f"bad alphamap magic {magic!r}: {path}")
    if version != ALPHAMAP_VERSION:
        raise ImageFormatError(f"unsupported alphamap version {version}: {path}")
    expected = _ALPHAMAP_HEADER.size + 4 * width * height
    if len(raw) != expected:
        raise ImageFormatError(
            f"alphamap payload is {len(raw) - _ALPHAMAP_HEADER.size} bytes, "
            f"expected {4 * width * height}: {path}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_ALPHAMAP_HEADER.size)
    if not np.isfinite(values).all():
        raise ImageFormatError(f"alphamap contains non-finite values: {path}")
    return AlphaMap(values.reshape(height, width))


def resample_alpha(mask: AlphaMap, target_height: int, target_width: int) -> AlphaMap:
    """Resample a mask with corner-aligned bilinear interpolation.

    Output values are convex combinations of input values, so they never
    leave [min(mask), max(mask)].
    """
    if target_height < 1 or target_width < 1:
        raise ValueError("target dimensions must be >= 1")
    if (target_height, target_width) == (mask.height, mask.width):
        return AlphaMap(mask.data.copy())
    out = bilinear_resize(mask.data.astype(np.float64), target_height, target_width)
    return AlphaMap(out.astype(np.float32))


def bilinear_resize(arr: np.ndarray, target_height: int, target_width: int) -> np.ndarray:
    """Corner-aligned bilinear resize of a 2-D or (H, W, C) float array."""
    src_h, src_w = arr.shape[0], arr.shape[1]
    ys = _corner_aligned_coords(src_h, target_height)
    xs = _corner_aligned_coords(src_w, target_width)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.minimum(y0, src_h - 1)
    x0 = np.minimum(x0, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    fy = ys - y0
    fx = xs - x0
    if arr.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = arr[y0][:, x0] * (1.0 - fx) + arr[y0][:, x1] * fx
    bot = arr[y1][:, x0] * (1.0 - fx) + arr[y1][:, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize_image(image: ImageTensor, target_height: int, target_width: int) -> ImageTensor:
    """Resize an image with the same corner-aligned bilinear scheme as masks."""
    if (target_height, target_width) == (image.height, image.width):
        return image
    out = bilinear_resize(image.data, target_height, target_width)
    return ImageTensor(np.clip(out, 0.0, 1.0))


def resize_partition_nearest(partition: RegionPartition, target_height: int, target_width: int) -> RegionPartition:
    """Nearest-neighbor resize of a label map, then dense relabel."""
    labels = partition.labels
    if (target_height, target_width) == labels.shape:
        return partition
    ys = np.rint(_corner_aligned_coords(labels.shape[0], target_height)).astype(np.intp)
    xs = np.rint(_corner_aligned_coords(labels.shape[1], target_width)).astype(np.intp)
    sampled = labels[ys][:, xs]
    _, dense = np.unique(sampled, return_inverse=True)
    out = dense.reshape(target_height, target_width).astype(np.int32)
    return RegionPartition(out, int(out.max()) + 1)


def _corner_aligned_coords(src: int, dst: int) -> np.ndarray:
    if dst == 1:
        return np.array([(src - 1) / 2.0])
    return np.arange(dst, dtype=np.float64) * (src - 1) / (dst - 1)


def _atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write to a temporary name in the target directory, then rename."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)
