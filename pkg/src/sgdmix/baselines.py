"""Reference mixing baselines for side-by-side comparison harnesses.

These take explicit mixing parameters (lambda, box) instead of sampling
them internally; the caller owns all randomness so comparisons stay
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Image

__all__ = [
    "BaselineError",
    "DiffMixLabelParams",
    "mixup",
    "cutmix",
    "diffmix_label",
]


class BaselineError(Exception):
    """Invalid baseline inputs (mismatched shapes, out-of-bounds box)."""


@dataclass(frozen=True)
class DiffMixLabelParams:
    """Strength and exponent of the nonlinear label mixing rule."""

    s: float
    gamma: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s {self.s} outside [0, 1]")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")


def _check_same_shape(a: Image, b: Image) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise BaselineError(f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")


def mixup(img_a: Image, img_b: Image, lam: float) -> tuple[Image, tuple[float, float]]:
    """Linear per-pixel blend lam*a + (1-lam)*b, rounded half-up to 8 bits.

    Label weights are (lam, 1-lam) for a's and b's classes respectively.
    """
    if not 0.0 <= lam <= 1.0:
        raise BaselineError(f"lambda {lam} outside [0, 1]")
    _check_same_shape(img_a, img_b)
    blend = lam * img_a.pixels.astype(np.float64) + (1.0 - lam) * img_b.pixels.astype(np.float64)
    # floor(x + 0.5) rounds half-up; exact endpoints stay exact.
    out = np.clip(np.floor(blend + 0.5), 0, 255).astype(np.uint8)
    return Image(out), (lam, 1.0 - lam)


def cutmix(
    img_a: Image, img_b: Image, box: tuple[int, int, int, int]
) -> tuple[Image, tuple[float, float]]:
    """Replace a rectangular region of a with the same region of b.

    box is (x, y, w, h) in pixels. Label weights are area-proportional:
    (1 - wh/WH, wh/WH).
    """
    _check_same_shape(img_a, img_b)
    x, y, w, h = box
    if w < 0 or h < 0:
        raise BaselineError(f"box {box} has negative extent")
    if x < 0 or y < 0 or x + w > img_a.width or y + h > img_a.height:
        raise BaselineError(
            f"box {box} exceeds image bounds {img_a.width}x{img_a.height}"
        )
    out = np.array(img_a.pixels)
    out[y : y + h, x : x + w] = img_b.pixels[y : y + h, x : x + w]
    frac = (w * h) / (img_a.width * img_a.height)
    return Image(out), (1.0 - frac, frac)


def diffmix_label(params: DiffMixLabelParams) -> tuple[float, float]:
    """Nonlinear label split (1 - s**gamma, s**gamma) between source and target."""
    target = params.s**params.gamma
    return (1.0 - target, target)
