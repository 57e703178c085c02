"""Stylization by direct pixel optimization.

The objective combines a spatially weighted content term with Gram-matrix
style terms:

* content, per layer: sum_ij alpha_ij * sum_c (F_cij - P_cij)^2, where the
  strength map alpha is resampled to each layer's spatial grid;
* style, per layer: sum of squared differences between Gram matrices
  G = A A^T / (C*H*W) of the working and style images.

The working image starts from the content image (or seeded uniform noise)
and is updated with Adam, clamping to [0, 1] after every step.  Gradients
come from the backend's hand-written vector-Jacobian product, so no
autodiff framework is involved.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .backends.base import ClassifierBackend, FeatureMap
from .errors import ConfigurationError, DivergenceError
from .imagecore import AlphaMap, ImageTensor, _atomic_write_bytes, resample_alpha

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

TRACE_HEADER = ("iteration", "content_loss", "style_loss", "total_loss")


@dataclass(frozen=True)
class StyleConfig:
    """Optimization settings for :func:`stylize`."""

    content_layers: Mapping[str, float] | None = None
    style_layers: Mapping[str, float] | None = None
    style_weight: float = 1.0
    iterations: int = 500
    step_size: float = 0.02
    init_mode: str = "content"
    random_seed: int = 0

    def __post_init__(self) -> None:
        if self.init_mode not in ("content", "random"):
            raise ConfigurationError("init_mode must be 'content' or 'random'")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be >= 0")
        if self.step_size <= 0:
            raise ConfigurationError("step_size must be > 0")
        if self.style_weight < 0:
            raise ConfigurationError("style_weight must be >= 0")
        for mapping in (self.content_layers, self.style_layers):
            if mapping is None:
                continue
            if not mapping:
                raise ConfigurationError("layer weight mappings may not be empty")
            for name, weight in mapping.items():
                if not np.isfinite(weight) or weight < 0:
                    raise ConfigurationError(f"invalid weight {weight!r} for layer {name!r}")


@dataclass(frozen=True)
class StyleResult:
    """Final image plus one (iteration, content, style, total) row per step."""

    image: ImageTensor
    trace: tuple[tuple[int, float, float, float], ...]


def content_loss(features: np.ndarray, target: np.ndarray) -> float:
    """Unweighted sum of squared feature differences."""
    return float(((features - target) ** 2).sum())


def weighted_content_loss(features: np.ndarray, target: np.ndarray, alpha: np.ndarray) -> float:
    """Per-location weighted sum of squared feature differences.

    ``alpha`` is (H, W) and scales the channel-summed squared error at
    each spatial position.
    """
    if features.shape != target.shape:
        raise ValueError(f"feature shapes differ: {features.shape} vs {target.shape}")
    if alpha.shape != features.shape[1:]:
        raise ValueError(f"alpha shape {alpha.shape} does not match features {features.shape}")
    per_location = ((features - target) ** 2).sum(axis=0)
    return float((alpha * per_location).sum())


def gram_matrix(features: np.ndarray) -> np.ndarray:
    """G = A A^T / (C*H*W) for features of shape (C, H, W)."""
    c, h, w = features.shape
    a = features.reshape(c, h * w)
    return (a @ a.T) / float(c * h * w)


def style_loss(gram: np.ndarray, target_gram: np.ndarray) -> float:
    """Sum of squared Gram-matrix differences for one layer."""
    return float(((gram - target_gram) ** 2).sum())


def _resolve_layers(
    requested: Mapping[str, float] | None,
    defaults: tuple[str, ...],
    available: tuple[str, ...],
    kind: str,
) -> dict[str, float]:
    if requested is None:
        weight = 1.0 / len(defaults)
        return {name: weight for name in defaults}
    unknown = [name for name in requested if name not in available]
    if unknown:
        raise ConfigurationError(
            f"unknown {kind} layer(s) {unknown}; backend offers {list(available)}"
        )
    return dict(requested)


def _objective(
    feats: Mapping[str, FeatureMap],
    content_targets: Mapping[str, np.ndarray],
    style_targets: Mapping[str, np.ndarray],
    content_weights: Mapping[str, float],
    style_weights: Mapping[str, float],
    alphas: Mapping[str, np.ndarray],
    style_weight: float,
) -> tuple[float, float, dict[str, np.ndarray]]:
    """Content/style losses and the per-layer cotangents of their sum."""
    cotangents: dict[str, np.ndarray] = {}

    def add(name: str, value: np.ndarray) -> None:
        if name in cotangents:
            cotangents[name] = cotangents[name] + value
        else:
            cotangents[name] = value

    content_total = 0.0
    for name, w in content_weights.items():
        f = feats[name].data
        diff = f - content_targets[name]
        alpha = alphas[name]
        content_total += w * float((alpha * (diff**2).sum(axis=0)).sum())
        add(name, (2.0 * w) * alpha[None, :, :] * diff)

    style_total = 0.0
    for name, w in style_weights.items():
        f = feats[name].data
        c, h, wd = f.shape
        n = float(c * h * wd)
        a = f.reshape(c, h * wd)
        gram = (a @ a.T) / n
        gdiff = gram - style_targets[name]
        style_total += w * float((gdiff**2).sum())
        add(name, (style_weight * w * 4.0 / n) * (gdiff @ a).reshape(c, h, wd))
    style_total *= style_weight
    return content_total, style_total, cotangents


def stylize(
    backend: ClassifierBackend,
    content: ImageTensor,
    style: ImageTensor,
    alpha: AlphaMap | None = None,
    config: StyleConfig | None = None,
) -> StyleResult:
    """Optimize an image toward the content/style targets.

    ``alpha`` must match the content image's height and width; omitting it
    weights every location equally at 1.0.  Raises
    :class:`~focalstyle.errors.DivergenceError` if any loss or gradient
    stops being finite.
    """
    config = config or StyleConfig()
    desc = backend.descriptor
    content_weights = _resolve_layers(
        config.content_layers, desc.content_layers, backend.layer_names, "content"
    )
    style_weights = _resolve_layers(
        config.style_layers, desc.style_layers, backend.layer_names, "style"
    )
    all_layers = tuple(dict.fromkeys((*content_weights, *style_weights)))

    if alpha is None:
        alpha = AlphaMap(np.ones((content.height, content.width), dtype=np.float32))
    if alpha.data.shape != (content.height, content.width):
        raise ValueError(
            f"alpha map {alpha.data.shape} does not match content image "
            f"{(content.height, content.width)}"
        )

    content_feats = backend.extract_features(content, tuple(content_weights))
    content_targets = {name: fm.data for name, fm in content_feats.items()}
    alphas = {
        name: resample_alpha(alpha, fm.data.shape[1], fm.data.shape[2]).data.astype(np.float64)
        for name, fm in content_feats.items()
    }
    style_feats = backend.extract_features(style, tuple(style_weights))
    style_targets = {name: gram_matrix(fm.data) for name, fm in style_feats.items()}

    if config.init_mode == "content":
        x = np.array(content.data)
    else:
        rng = np.random.default_rng(config.random_seed)
        x = rng.random((content.height, content.width, 3), dtype=np.float64)

    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace: list[tuple[int, float, float, float]] = []
    for it in range(config.iterations):
        feats, vjp = backend.features_with_vjp(ImageTensor(x), all_layers)
        with np.errstate(over="ignore", invalid="ignore"):  # non-finite handled below
            c_loss, s_loss, cotangents = _objective(
                feats,
                content_targets,
                style_targets,
                content_weights,
                style_weights,
                alphas,
                config.style_weight,
            )
        total = c_loss + s_loss
        if not np.isfinite(total):
            raise DivergenceError(it, f"objective became non-finite ({total})")
        trace.append((it, c_loss, s_loss, total))

        grad = vjp(cotangents)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(it, "gradient became non-finite")

        t = it + 1
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad**2
        m_hat = m / (1.0 - ADAM_BETA1**t)
        v_hat = v / (1.0 - ADAM_BETA2**t)
        x = np.clip(x - config.step_size * m_hat / (np.sqrt(v_hat) + ADAM_EPS), 0.0, 1.0)

    return StyleResult(ImageTensor(x), tuple(trace))


def write_trace(path, trace) -> None:
    """Write the optimization trace as CSV (header + one row per step)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for it, c_loss, s_loss, total in trace:
        writer.writerow([it, repr(float(c_loss)), repr(float(s_loss)), repr(float(total))])
    _atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
