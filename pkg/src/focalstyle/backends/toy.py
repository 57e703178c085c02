"""Tiny deterministic backend for tests and CPU-only pipelines.

The network is fixed and weightless: the input is reduced to a 16x16
grayscale map by adaptive block averaging, the four 8x8 quadrant blocks
form the feature channels, and the four class logits are the quadrant
mean brightnesses scaled by 10.  Every step is linear up to the final
softmax, so occlusion scores and loss gradients can be checked by hand.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..imagecore import ImageTensor
from .base import (
    BackendDescriptor,
    ClassDistribution,
    ClassifierBackend,
    FeatureMap,
    FeatureVjp,
)

POOL_SIZE = 16
QUAD = POOL_SIZE // 2
LOGIT_SCALE = 10.0

_CLASS_NAMES = ("top-left", "top-right", "bottom-left", "bottom-right")

TOY_DESCRIPTOR = BackendDescriptor(
    name="toy",
    class_count=4,
    content_layers=("pixels", "luma16"),
    style_layers=("pixels", "quadrants"),
    input_size_policy="flexible",
)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@lru_cache(maxsize=64)
def _pool_operator(src: int) -> np.ndarray:
    """(POOL_SIZE, src) row-averaging matrix for adaptive mean pooling.

    Bin i covers source indices [floor(i*src/16), ceil((i+1)*src/16)); bins
    overlap when src < 16 and tile exactly when 16 divides src.
    """
    op = np.zeros((POOL_SIZE, src), dtype=np.float64)
    for i in range(POOL_SIZE):
        start = (i * src) // POOL_SIZE
        stop = -((-(i + 1) * src) // POOL_SIZE)  # ceil division
        stop = max(stop, start + 1)
        op[i, start:stop] = 1.0 / (stop - start)
    return op


class ToyQuadrantBackend(ClassifierBackend):
    """Four-class quadrant-brightness classifier with analytic gradients."""

    def __init__(self):
        self.descriptor = TOY_DESCRIPTOR

    @property
    def layer_names(self) -> tuple[str, ...]:
        return ("pixels", "luma16", "quadrants")

    def class_name(self, index: int) -> str:
        return _CLASS_NAMES[index]

    def classify(self, image: ImageTensor) -> ClassDistribution:
        pooled = self._pool(image.data)
        return ClassDistribution(softmax(LOGIT_SCALE * self._quadrant_means(pooled)))

    def classify_batch(self, images: list[ImageTensor]) -> list[ClassDistribution]:
        self._check_batch(images)
        stack = np.stack([img.data for img in images])  # (B, H, W, 3)
        gray = stack.mean(axis=3)
        r = _pool_operator(gray.shape[1])
        c = _pool_operator(gray.shape[2])
        pooled = np.matmul(np.matmul(r, gray), c.T)  # same gemms as classify
        means = np.stack([self._quadrant_means(p) for p in pooled])
        probs = softmax(LOGIT_SCALE * means)
        return [ClassDistribution(p) for p in probs]

    def features_with_vjp(
        self, image: ImageTensor, layers: list[str] | tuple[str, ...]
    ) -> tuple[dict[str, FeatureMap], FeatureVjp]:
        names = self._check_layers(layers)
        h, w = image.height, image.width
        r = _pool_operator(h)
        c = _pool_operator(w)
        pooled = r @ image.data.mean(axis=2) @ c.T

        feats: dict[str, FeatureMap] = {}
        for name in names:
            if name == "pixels":
                data = image.data.transpose(2, 0, 1)
            elif name == "luma16":
                data = pooled[None, :, :]
            else:  # quadrants
                data = self._quadrant_blocks(pooled)
            feats[name] = FeatureMap(name, data.copy())

        def vjp(cotangents) -> np.ndarray:
            grad = np.zeros((h, w, 3), dtype=np.float64)
            g_pooled = np.zeros((POOL_SIZE, POOL_SIZE), dtype=np.float64)
            for name, cot in cotangents.items():
                if name == "pixels":
                    grad += np.asarray(cot, dtype=np.float64).transpose(1, 2, 0)
                elif name == "luma16":
                    g_pooled += np.asarray(cot, dtype=np.float64)[0]
                elif name == "quadrants":
                    g_pooled += self._scatter_quadrants(np.asarray(cot, dtype=np.float64))
                else:
                    raise KeyError(f"cotangent for unrequested layer {name!r}")
            if g_pooled.any():
                g_gray = r.T @ g_pooled @ c
                grad += g_gray[:, :, None] / 3.0
            return grad

        return feats, vjp

    @staticmethod
    def _pool(data: np.ndarray) -> np.ndarray:
        r = _pool_operator(data.shape[0])
        c = _pool_operator(data.shape[1])
        return r @ data.mean(axis=2) @ c.T

    @staticmethod
    def _quadrant_blocks(pooled: np.ndarray) -> np.ndarray:
        q = QUAD
        return np.stack(
            [pooled[:q, :q], pooled[:q, q:], pooled[q:, :q], pooled[q:, q:]]
        )

    @staticmethod
    def _scatter_quadrants(blocks: np.ndarray) -> np.ndarray:
        q = QUAD
        out = np.zeros((POOL_SIZE, POOL_SIZE), dtype=np.float64)
        out[:q, :q] = blocks[0]
        out[:q, q:] = blocks[1]
        out[q:, :q] = blocks[2]
        out[q:, q:] = blocks[3]
        return out

    @classmethod
    def _quadrant_means(cls, pooled: np.ndarray) -> np.ndarray:
        return cls._quadrant_blocks(pooled).mean(axis=(1, 2))
