"""Saliency-guided, label-preserving image mixing and dataset augmentation.

The pipeline mixes each source image with its nearest-saliency target
(foreground union mask, pixel-wise composite), refines the result with a
diffusion-style backend, and emits generated samples whose labels stay
those of the source.
"""

from .baselines import BaselineError, DiffMixLabelParams, cutmix, diffmix_label, mixup
from .imaging import (
    BinaryMask,
    Image,
    ImagingError,
    SaliencyMap,
    load_image,
    load_saliency,
    minmax_scale,
    resize_bilinear,
    resize_image_bilinear,
    save_image,
    save_saliency,
)
from .masking import MaskingError, OtsuResult, composite, otsu_threshold, union_masks
from .pipeline import (
    AugmentationConfig,
    AugmentResult,
    FailureRecord,
    ManifestRecord,
    PipelineError,
    augment_dataset,
    build_refiner,
    derive_seed,
    load_manifest,
    sample_training_view,
    smooth_label,
)
from .refinement import (
    NoiseSchedule,
    PromptSpec,
    RefineDimensionError,
    RefineError,
    RefineProtocolError,
    RefineRequest,
    RefineStatusError,
    RefineTransportError,
    Refiner,
    RemoteRefiner,
    forward_noise,
    forward_noise_floats,
    refine_identity,
    refine_noise_stub,
    refine_remote,
)
from .report import render_report
from .saliency import SaliencyError, SpectralResidualParams, normalize_minmax, spectral_residual
from .selection import (
    DatasetIndex,
    IndexEntry,
    SelectionError,
    SelectionOutcome,
    l2_distance,
    load_index,
    sample_target_batch,
    select_target,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # imaging
    "Image",
    "SaliencyMap",
    "BinaryMask",
    "ImagingError",
    "load_image",
    "save_image",
    "load_saliency",
    "save_saliency",
    "resize_bilinear",
    "resize_image_bilinear",
    "minmax_scale",
    # saliency
    "SaliencyError",
    "SpectralResidualParams",
    "normalize_minmax",
    "spectral_residual",
    # masking
    "MaskingError",
    "OtsuResult",
    "otsu_threshold",
    "union_masks",
    "composite",
    # selection
    "SelectionError",
    "IndexEntry",
    "DatasetIndex",
    "SelectionOutcome",
    "load_index",
    "sample_target_batch",
    "select_target",
    "l2_distance",
    # refinement
    "RefineError",
    "RefineTransportError",
    "RefineStatusError",
    "RefineProtocolError",
    "RefineDimensionError",
    "PromptSpec",
    "NoiseSchedule",
    "RefineRequest",
    "Refiner",
    "forward_noise",
    "forward_noise_floats",
    "refine_identity",
    "refine_noise_stub",
    "refine_remote",
    "RemoteRefiner",
    # pipeline
    "PipelineError",
    "AugmentationConfig",
    "ManifestRecord",
    "FailureRecord",
    "AugmentResult",
    "smooth_label",
    "derive_seed",
    "build_refiner",
    "augment_dataset",
    "sample_training_view",
    "load_manifest",
    # baselines
    "BaselineError",
    "DiffMixLabelParams",
    "mixup",
    "cutmix",
    "diffmix_label",
    # report
    "render_report",
]
