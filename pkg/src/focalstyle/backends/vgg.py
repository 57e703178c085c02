"""VGG-style convolutional backend running on the package's own kernels.

Weights are ingested from an ``.npz`` archive (layout documented in the
README along with a conversion snippet for common pretrained checkpoints);
nothing is ever trained here.  The forward pass and the input-gradient
backward pass are written against :mod:`focalstyle.kernels`, so the same
code serves classification, feature extraction, and style optimization.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from zipfile import BadZipFile

import numpy as np

from .. import kernels
from ..errors import ConfigurationError, WeightFormatError
from ..imagecore import ImageTensor, bilinear_resize
from .base import (
    BackendDescriptor,
    ClassDistribution,
    ClassifierBackend,
    FeatureMap,
    FeatureVjp,
)
from .toy import softmax

WEIGHTS_ENV_VAR = "FOCALSTYLE_VGG_WEIGHTS"
DEFAULT_ARCHIVE_NAME = "vgg19.npz"


@dataclass(frozen=True)
class ConvNetArch:
    """Static architecture: conv/pool plan, classifier head, preprocessing."""

    name: str
    plan: tuple[tuple, ...]  # ("conv", name, in_ch, out_ch) or ("pool", name)
    head: tuple[tuple[str, int, int], ...]  # (name, in_features, out_features)
    native_size: int
    mean: tuple[float, float, float]
    std: tuple[float, float, float]

    @property
    def conv_names(self) -> tuple[str, ...]:
        return tuple(op[1] for op in self.plan if op[0] == "conv")


def _vgg19_plan() -> tuple[tuple, ...]:
    plan: list[tuple] = []
    channels = 3
    for block, (n_convs, width) in enumerate(
        [(2, 64), (2, 128), (4, 256), (4, 512), (4, 512)], start=1
    ):
        for i in range(1, n_convs + 1):
            plan.append(("conv", f"conv{block}_{i}", channels, width))
            channels = width
        plan.append(("pool", f"pool{block}"))
    return tuple(plan)


VGG19_ARCH = ConvNetArch(
    name="vgg19",
    plan=_vgg19_plan(),
    head=(("fc6", 512 * 7 * 7, 4096), ("fc7", 4096, 4096), ("fc8", 4096, 1000)),
    native_size=224,
    mean=(0.485, 0.456, 0.406),
    std=(0.229, 0.224, 0.225),
)

VGG19_DESCRIPTOR = BackendDescriptor(
    name="vgg19",
    class_count=1000,
    content_layers=("conv4_2",),
    style_layers=("conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"),
    input_size_policy="fixed",
)


class VggBackend(ClassifierBackend):
    """Conv-stack classifier with feature taps named after its conv layers.

    A tap named ``convN_M`` exposes the activations after that layer's ReLU.
    The classifier head is optional in the archive; without it only feature
    extraction is available.
    """

    def __init__(
        self,
        weights: dict[str, np.ndarray],
        descriptor: BackendDescriptor | None = None,
        arch: ConvNetArch = VGG19_ARCH,
        class_names: tuple[str, ...] | None = None,
        weights_checksum: str | None = None,
    ):
        self.arch = arch
        self.descriptor = descriptor or VGG19_DESCRIPTOR
        self._weights = _validate_weights(weights, arch)
        self._has_head = all(f"{name}.weight" in self._weights for name, _, _ in arch.head)
        self._class_names = class_names
        self.weights_checksum = weights_checksum
        self._flipped: dict[str, np.ndarray] = {}
        for layer in list(self.descriptor.content_layers) + list(self.descriptor.style_layers):
            if layer not in self.layer_names:
                raise ConfigurationError(
                    f"descriptor layer {layer!r} not in architecture {arch.name!r}"
                )

    @property
    def layer_names(self) -> tuple[str, ...]:
        return self.arch.conv_names

    def class_name(self, index: int) -> str:
        if self._class_names is not None:
            return self._class_names[index]
        return f"class_{index}"

    def classify(self, image: ImageTensor) -> ClassDistribution:
        if not self._has_head:
            raise ConfigurationError(
                "weight archive has no classifier head (fc6/fc7/fc8); classify unavailable"
            )
        size = self.arch.native_size
        resized = bilinear_resize(image.data, size, size)
        x = self._preprocess(np.clip(resized, 0.0, 1.0))
        for op in self.arch.plan:
            x = self._apply(op, x)
        flat = x.reshape(-1)
        for i, (name, _, _) in enumerate(self.arch.head):
            flat = self._weights[f"{name}.weight"] @ flat + self._weights[f"{name}.bias"]
            if i < len(self.arch.head) - 1:
                flat = np.maximum(flat, 0.0)
        return ClassDistribution(softmax(flat.astype(np.float64)))

    def classify_batch(self, images: list[ImageTensor]) -> list[ClassDistribution]:
        self._check_batch(images)
        return [self.classify(img) for img in images]

    def features_with_vjp(
        self, image: ImageTensor, layers: list[str] | tuple[str, ...]
    ) -> tuple[dict[str, FeatureMap], FeatureVjp]:
        names = self._check_layers(layers)
        if not names:
            return {}, lambda cotangents: np.zeros(
                (image.height, image.width, 3), dtype=np.float64
            )
        wanted = set(names)
        depth = max(
            i for i, op in enumerate(self.arch.plan) if op[0] == "conv" and op[1] in wanted
        )
        x = self._preprocess(image.data)
        self._check_geometry(image.height, image.width, depth)

        acts: list[np.ndarray] = []  # output of each executed op
        pool_idx: dict[int, tuple[np.ndarray, tuple]] = {}
        feats: dict[str, FeatureMap] = {}
        for i, op in enumerate(self.arch.plan[: depth + 1]):
            if op[0] == "conv":
                x = np.maximum(kernels.conv3x3(x, *self._conv_params(op[1])), 0.0)
                if op[1] in wanted:
                    feats[op[1]] = FeatureMap(op[1], x.astype(np.float64))
            else:
                in_shape = x.shape
                x, idx = kernels.maxpool2(x)
                pool_idx[i] = (idx, in_shape)
            acts.append(x)

        std = np.asarray(self.arch.std, dtype=np.float64)

        def vjp(cotangents) -> np.ndarray:
            for name in cotangents:
                if name not in wanted:
                    raise KeyError(f"cotangent for unrequested layer {name!r}")
            g = np.zeros_like(acts[depth])
            for i in range(depth, -1, -1):
                op = self.arch.plan[i]
                if op[0] == "conv":
                    if op[1] in cotangents:
                        g = g + np.asarray(cotangents[op[1]], dtype=g.dtype)
                    g = g * (acts[i] > 0)
                    g = kernels.conv3x3(g, *self._flipped_params(op[1]))
                else:
                    idx, in_shape = pool_idx[i]
                    g = kernels.maxpool2_vjp(g, idx, in_shape)
            grad = g.astype(np.float64).transpose(1, 2, 0) / std
            return grad

        return feats, vjp

    def _preprocess(self, data: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.arch.mean)
        std = np.asarray(self.arch.std)
        x = (data - mean) / std
        return np.ascontiguousarray(x.transpose(2, 0, 1), dtype=np.float32)

    def _apply(self, op: tuple, x: np.ndarray) -> np.ndarray:
        if op[0] == "conv":
            return np.maximum(kernels.conv3x3(x, *self._conv_params(op[1])), 0.0)
        return kernels.maxpool2(x)[0]

    def _conv_params(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return self._weights[f"{name}.weight"], self._weights[f"{name}.bias"]

    def _flipped_params(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Transposed, spatially flipped weights: the conv input-VJP reuses
        the forward kernel."""
        flipped = self._flipped.get(name)
        if flipped is None:
            w = self._weights[f"{name}.weight"]
            flipped = np.ascontiguousarray(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
            self._flipped[name] = flipped
        zero_bias = np.zeros(flipped.shape[0], dtype=flipped.dtype)
        return flipped, zero_bias

    def _check_geometry(self, height: int, width: int, depth: int) -> None:
        h, w = height, width
        for op in self.arch.plan[: depth + 1]:
            if op[0] == "pool":
                h, w = h // 2, w // 2
                if h < 1 or w < 1:
                    raise ConfigurationError(
                        f"input {height}x{width} too small for requested layers "
                        f"(collapses at {op[1]})"
                    )


def _validate_weights(weights: dict[str, np.ndarray], arch: ConvNetArch) -> dict[str, np.ndarray]:
    validated: dict[str, np.ndarray] = {}
    for op in arch.plan:
        if op[0] != "conv":
            continue
        _, name, in_ch, out_ch = op
        w = weights.get(f"{name}.weight")
        b = weights.get(f"{name}.bias")
        if w is None or b is None:
            raise WeightFormatError(f"archive is missing {name}.weight / {name}.bias")
        if w.shape != (out_ch, in_ch, 3, 3):
            raise WeightFormatError(
                f"{name}.weight has shape {w.shape}, expected {(out_ch, in_ch, 3, 3)}"
            )
        if b.shape != (out_ch,):
            raise WeightFormatError(f"{name}.bias has shape {b.shape}, expected {(out_ch,)}")
        validated[f"{name}.weight"] = np.ascontiguousarray(w, dtype=np.float32)
        validated[f"{name}.bias"] = np.ascontiguousarray(b, dtype=np.float32)
    head_present = [name for name, _, _ in arch.head if f"{name}.weight" in weights]
    if head_present and len(head_present) != len(arch.head):
        raise WeightFormatError(
            f"classifier head is partial: found {head_present}, "
            f"expected all of {[name for name, _, _ in arch.head]}"
        )
    if head_present:
        for name, in_f, out_f in arch.head:
            w = weights[f"{name}.weight"]
            b = weights.get(f"{name}.bias")
            if w.shape != (out_f, in_f) or b is None or b.shape != (out_f,):
                raise WeightFormatError(
                    f"{name} has shapes {w.shape} / "
                    f"{None if b is None else b.shape}, expected {(out_f, in_f)} / {(out_f,)}"
                )
            validated[f"{name}.weight"] = np.ascontiguousarray(w, dtype=np.float32)
            validated[f"{name}.bias"] = np.ascontiguousarray(b, dtype=np.float32)
    return validated


def load_pretrained(
    weights_path: str | Path,
    descriptor: BackendDescriptor | None = None,
    arch: ConvNetArch = VGG19_ARCH,
) -> VggBackend:
    """Load a weight archive and return a ready backend.

    The archive is an ``.npz`` with ``<layer>.weight`` / ``<layer>.bias``
    entries (float32) and an optional ``class_names`` string array.  A
    sha256 checksum of the loaded tensors is exposed on the backend for
    reproducibility logging.
    """
    path = Path(weights_path)
    if path.is_dir():
        path = path / DEFAULT_ARCHIVE_NAME
    if not path.exists():
        raise FileNotFoundError(f"weight archive not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            entries = {key: archive[key] for key in archive.files}
    except (BadZipFile, ValueError, OSError, EOFError) as exc:
        raise WeightFormatError(f"cannot read weight archive {path}: {exc}") from exc

    class_names = None
    if "class_names" in entries:
        class_names = tuple(str(s) for s in entries.pop("class_names"))

    checksum = _weights_checksum(entries)
    return VggBackend(
        entries,
        descriptor=descriptor,
        arch=arch,
        class_names=class_names,
        weights_checksum=checksum,
    )


def default_weights_path() -> Path | None:
    """Weights location from the FOCALSTYLE_VGG_WEIGHTS environment variable."""
    value = os.environ.get(WEIGHTS_ENV_VAR)
    return Path(value) if value else None


def _weights_checksum(entries: dict[str, np.ndarray]) -> str:
    digest = hashlib.sha256()
    for key in sorted(entries):
        digest.update(key.encode())
        digest.update(np.ascontiguousarray(entries[key]).tobytes())
    return digest.hexdigest()
