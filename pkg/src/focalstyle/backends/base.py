"""Classifier backend interface: class probabilities plus feature taps.

A backend owns its preprocessing (resizing, normalization); module
boundaries stay in [0, 1] RGB pixel space.  ``features_with_vjp`` is the
hook the style engine uses to push loss gradients back to image pixels.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..errors import ConfigurationError
from ..imagecore import ImageTensor

# Maps layer name -> cotangent array (same shape as the feature data);
# returns the loss gradient with respect to the H x W x 3 input pixels.
FeatureVjp = Callable[[Mapping[str, np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class ClassDistribution:
    """Probability vector over the backend's classes."""

    probabilities: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probabilities, dtype=np.float64, order="C")
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("probabilities must be a non-empty vector")
        if (arr < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(arr.sum() - 1.0) > 1e-5:
            raise ValueError(f"probabilities sum to {arr.sum()}, expected 1")
        arr.flags.writeable = False
        object.__setattr__(self, "probabilities", arr)

    @property
    def class_count(self) -> int:
        return self.probabilities.size

    def top_k(self, k: int) -> list[tuple[int, float]]:
        order = np.argsort(-self.probabilities, kind="stable")[:k]
        return [(int(i), float(self.probabilities[i])) for i in order]


@dataclass(frozen=True)
class FeatureMap:
    """Activations of one layer, shaped (channels, height, width).

    The wrapped array is frozen in place rather than copied: activations can
    be tens of megabytes, and backends hand over freshly allocated buffers.
    """

    layer_name: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data)
        if arr.ndim != 3:
            raise ValueError(f"feature map must be (C, H, W), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError(f"feature map {self.layer_name!r} has non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BackendDescriptor:
    """Published contract of a backend: classes, layers, sizing policy."""

    name: str
    class_count: int
    content_layers: tuple[str, ...]
    style_layers: tuple[str, ...]
    input_size_policy: str  # "fixed" or "flexible"

    def __post_init__(self):
        if not self.content_layers or not self.style_layers:
            raise ValueError("content and style layer lists must be non-empty")
        if self.input_size_policy not in ("fixed", "flexible"):
            raise ValueError("input_size_policy must be 'fixed' or 'flexible'")


class ClassifierBackend(ABC):
    """Read-only after construction; safe to share across concurrent calls."""

    descriptor: BackendDescriptor

    @property
    @abstractmethod
    def layer_names(self) -> tuple[str, ...]:
        """All layers that may be requested from extract_features."""

    @abstractmethod
    def classify(self, image: ImageTensor) -> ClassDistribution:
        """Class probabilities for one image (deterministic)."""

    @abstractmethod
    def features_with_vjp(
        self, image: ImageTensor, layers: list[str] | tuple[str, ...]
    ) -> tuple[dict[str, FeatureMap], FeatureVjp]:
        """Feature maps for the requested layers plus a pixel-gradient hook."""

    def classify_batch(self, images: list[ImageTensor]) -> list[ClassDistribution]:
        """Elementwise equal to mapping classify over the list."""
        self._check_batch(images)
        return [self.classify(img) for img in images]

    def extract_features(
        self, image: ImageTensor, layers: list[str] | tuple[str, ...]
    ) -> dict[str, FeatureMap]:
        feats, _ = self.features_with_vjp(image, layers)
        return feats

    def class_name(self, index: int) -> str:
        return f"class_{index}"

    def _check_batch(self, images: list[ImageTensor]) -> None:
        if not images:
            raise ValueError("batch must be non-empty")
        shape = images[0].data.shape
        if any(img.data.shape != shape for img in images):
            raise ValueError("batch images must share dimensions")

    def _check_layers(self, layers) -> tuple[str, ...]:
        known = self.layer_names
        unknown = [name for name in layers if name not in known]
        if unknown:
            raise ConfigurationError(
                f"unknown layer(s) {unknown} for backend {self.descriptor.name!r}; "
                f"available: {list(known)}"
            )
        return tuple(layers)
