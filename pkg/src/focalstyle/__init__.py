"""Style transfer with spatially varying strength.

The stylization-strength map comes from occlusion analysis: regions whose
removal moves a classifier's output the most are treated as the image's
central object and stylized gently.
"""

from .backends import (
    BACKEND_NAMES,
    BackendDescriptor,
    ClassDistribution,
    ClassifierBackend,
    FeatureMap,
    ToyQuadrantBackend,
    VggBackend,
    get_backend,
    load_pretrained,
)
from .errors import (
    ConfigurationError,
    DegeneratePartitionError,
    DivergenceError,
    FocalStyleError,
    ImageFormatError,
    WeightFormatError,
)
from .imagecore import (
    AlphaMap,
    ImageTensor,
    RegionPartition,
    load_image,
    read_alphamap,
    resample_alpha,
    resize_image,
    save_image,
    save_mask_png,
    write_alphamap,
)
from .saliency import (
    MaskMethodConfig,
    RegionScore,
    average_masks,
    generate_mask,
    load_segmentation,
    normalize_mask,
    occlude,
    patch_partition,
    score_regions,
    scores_to_mask,
    segmentation_refine,
)
from .slic import slic_superpixels
from .styler import (
    StyleConfig,
    StyleResult,
    content_loss,
    gram_matrix,
    style_loss,
    stylize,
    weighted_content_loss,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaMap",
    "BACKEND_NAMES",
    "BackendDescriptor",
    "ClassDistribution",
    "ClassifierBackend",
    "ConfigurationError",
    "DegeneratePartitionError",
    "DivergenceError",
    "FeatureMap",
    "FocalStyleError",
    "ImageFormatError",
    "ImageTensor",
    "MaskMethodConfig",
    "RegionPartition",
    "RegionScore",
    "StyleConfig",
    "StyleResult",
    "ToyQuadrantBackend",
    "VggBackend",
    "WeightFormatError",
    "average_masks",
    "content_loss",
    "generate_mask",
    "get_backend",
    "gram_matrix",
    "load_image",
    "load_pretrained",
    "load_segmentation",
    "normalize_mask",
    "occlude",
    "patch_partition",
    "read_alphamap",
    "resample_alpha",
    "resize_image",
    "save_image",
    "save_mask_png",
    "score_regions",
    "scores_to_mask",
    "segmentation_refine",
    "slic_superpixels",
    "style_loss",
    "stylize",
    "weighted_content_loss",
    "write_alphamap",
    "write_trace",
    "__version__",
]
