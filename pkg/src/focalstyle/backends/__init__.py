"""Classifier backends: a deterministic toy network and a VGG conv stack."""

from __future__ import annotations

from pathlib import Path

from ..errors import ConfigurationError
from .base import BackendDescriptor, ClassDistribution, ClassifierBackend, FeatureMap
from .toy import ToyQuadrantBackend
from .vgg import (
    VGG19_ARCH,
    VGG19_DESCRIPTOR,
    VggBackend,
    default_weights_path,
    load_pretrained,
)

BACKEND_NAMES = ("toy", "vgg")


def get_backend(name: str, weights_path: str | Path | None = None) -> ClassifierBackend:
    """Construct a backend by name.

    ``vgg`` needs a weight archive, found via the explicit argument or the
    FOCALSTYLE_VGG_WEIGHTS environment variable.
    """
    if name == "toy":
        return ToyQuadrantBackend()
    if name == "vgg":
        path = Path(weights_path) if weights_path else default_weights_path()
        if path is None:
            raise ConfigurationError(
                "vgg backend needs a weight archive: pass a path or set "
                "FOCALSTYLE_VGG_WEIGHTS"
            )
        return load_pretrained(path)
    raise ConfigurationError(f"unknown backend {name!r}; choose from {BACKEND_NAMES}")


__all__ = [
    "BACKEND_NAMES",
    "BackendDescriptor",
    "ClassDistribution",
    "ClassifierBackend",
    "FeatureMap",
    "ToyQuadrantBackend",
    "VGG19_ARCH",
    "VGG19_DESCRIPTOR",
    "VggBackend",
    "get_backend",
    "load_pretrained",
]
