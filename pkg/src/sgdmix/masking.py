"""Foreground extraction and pixel-wise image composition.

Saliency maps are quantized to a 256-bin histogram and split by Otsu's
between-class-variance criterion. Masks from the two images of a pair
are merged by union so the source foreground always survives, then the
composite takes source pixels where the mask is set and target pixels
elsewhere. No blending: every output pixel comes from exactly one input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import BinaryMask, Image, SaliencyMap

__all__ = [
    "MaskingError",
    "OtsuResult",
    "otsu_threshold",
    "union_masks",
    "composite",
]


class MaskingError(Exception):
    """Shape or channel mismatch between masking inputs."""


@dataclass(frozen=True, eq=False)
class OtsuResult:
    """Outcome of Otsu thresholding.

    threshold : chosen histogram bin in [0, 255]; foreground is strictly above it
    mask : boolean foreground mask
    between_class_variance : criterion value at the chosen threshold
    degenerate : True when all samples fell into a single bin (mask is all
        foreground then, which keeps the whole source image and is therefore
        the label-safe fallback)
    """

    threshold: int
    mask: BinaryMask
    between_class_variance: float
    degenerate: bool = False

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold {self.threshold} outside [0, 255]")
        if self.between_class_variance < 0:
            raise ValueError("between-class variance must be >= 0")


def otsu_threshold(sal: SaliencyMap) -> OtsuResult:
    """Split a saliency map into foreground/background by Otsu's criterion.

    Values are quantized to bins floor(v * 255). The threshold maximizes
    the between-class variance over all 256 candidates; ties go to the
    smallest maximizing bin. Foreground means bin > threshold.
    """
    bins = np.floor(sal.values * 255.0).astype(np.int64)
    hist = np.bincount(bins.ravel(), minlength=256).astype(np.int64)

    occupied = np.nonzero(hist)[0]
    if occupied.size == 1:
        only = int(occupied[0])
        mask = BinaryMask(np.ones(bins.shape, dtype=np.bool_))
        return OtsuResult(only, mask, 0.0, degenerate=True)

    n = float(hist.sum())
    levels = np.arange(256, dtype=np.int64)
    cum_count = np.cumsum(hist)
    cum_sum = np.cumsum(hist * levels)

    # Background = bins <= t, foreground = bins > t, for each candidate t.
    n0 = cum_count.astype(np.float64)
    n1 = n - n0
    valid = (n0 > 0) & (n1 > 0)
    variance = np.zeros(256, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum_sum / n0
        mu1 = (cum_sum[-1] - cum_sum) / n1
        d = mu0 - mu1
        full = (n0 / n) * (n1 / n) * (d * d)
    variance[valid] = full[valid]

    threshold = int(np.argmax(variance))  # argmax takes the first (smallest) maximizer
    mask = BinaryMask(bins > threshold)
    return OtsuResult(threshold, mask, float(variance[threshold]))


def union_masks(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    """Elementwise OR of two masks of identical dimensions."""
    if a.bits.shape != b.bits.shape:
        raise MaskingError(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    return BinaryMask(a.bits | b.bits)


def composite(mask: BinaryMask, source: Image, target: Image) -> Image:
    """Take source pixels where the mask is set, target pixels elsewhere."""
    if source.pixels.shape != target.pixels.shape:
        raise MaskingError(
            f"image shapes differ: {source.pixels.shape} vs {target.pixels.shape}"
        )
    if mask.bits.shape != source.pixels.shape[:2]:
        raise MaskingError(
            f"mask {mask.bits.shape} does not cover image {source.pixels.shape[:2]}"
        )
    out = np.where(mask.bits[:, :, np.newaxis], source.pixels, target.pixels)
    return Image(out)
