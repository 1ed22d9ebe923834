"""Spectral-residual saliency and saliency normalization.

The detector works at a small fixed working resolution: the image is
downscaled, the log-amplitude spectrum is compared against its local
average, and the residual is transformed back to image space. Whatever
survives the smoothing is what "pops out" of the scene statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import Image, SaliencyMap, _bilinear_grid, minmax_scale

__all__ = [
    "SaliencyError",
    "SpectralResidualParams",
    "normalize_minmax",
    "spectral_residual",
]

# Guards log() against exact-zero spectral bins.
_LOG_EPS = 1e-8

_MIN_EDGE = 8

# Rec. 601 luma weights.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class SaliencyError(Exception):
    """Input unsuitable for saliency computation."""


@dataclass(frozen=True)
class SpectralResidualParams:
    """Knobs of the spectral-residual detector.

    resize_edge : working resolution; both edges are resized to this
    avg_filter_size : box filter width for the average log spectrum, odd
    smooth_sigma : Gaussian std (in working pixels) applied to the raw map
    """

    resize_edge: int = 64
    avg_filter_size: int = 3
    smooth_sigma: float = 2.5

    def __post_init__(self):
        if self.resize_edge < _MIN_EDGE:
            raise ValueError(f"resize_edge must be >= {_MIN_EDGE}")
        if self.avg_filter_size < 1 or self.avg_filter_size % 2 == 0:
            raise ValueError("avg_filter_size must be odd and >= 1")
        if not self.smooth_sigma > 0:
            raise ValueError("smooth_sigma must be > 0")


def normalize_minmax(sal: SaliencyMap) -> SaliencyMap:
    """Stretch a saliency map to span [0, 1]; constant maps pass through."""
    return SaliencyMap(minmax_scale(sal.values))


def _to_gray(img: Image) -> np.ndarray:
    px = img.pixels.astype(np.float64) / 255.0
    if img.channels == 1:
        return px[:, :, 0]
    return px @ _LUMA


def spectral_residual(img: Image, params: SpectralResidualParams | None = None) -> SaliencyMap:
    """Compute a spectral-residual saliency map at the image's resolution.

    Deterministic: identical input and params give bit-identical output.
    Constant images carry no residual structure and map to all-zero
    saliency (normalization is skipped for them).
    """
    if params is None:
        params = SpectralResidualParams()
    if img.height < _MIN_EDGE or img.width < _MIN_EDGE:
        raise SaliencyError(
            f"image {img.width}x{img.height} too small for spectral residual "
            f"(needs at least {_MIN_EDGE}x{_MIN_EDGE})"
        )

    gray = _to_gray(img)
    edge = params.resize_edge
    if gray.shape != (edge, edge):
        work = _bilinear_grid(gray, edge, edge)
    else:
        work = gray
    if work.max() == work.min():
        return SaliencyMap(np.zeros((img.height, img.width)))

    spectrum = np.fft.fft2(work)
    log_amplitude = np.log(np.abs(spectrum) + _LOG_EPS)
    phase = np.angle(spectrum)
    avg_log_amplitude = ndimage.uniform_filter(
        log_amplitude, size=params.avg_filter_size, mode="nearest"
    )
    residual = log_amplitude - avg_log_amplitude
    recombined = np.exp(residual + 1j * phase)
    raw = np.abs(np.fft.ifft2(recombined)) ** 2
    smooth = ndimage.gaussian_filter(raw, sigma=params.smooth_sigma)

    if smooth.shape != (img.height, img.width):
        smooth = _bilinear_grid(smooth, img.width, img.height)
    if smooth.max() == smooth.min():
        # No surviving structure; same degenerate shape as the constant input.
        return SaliencyMap(np.zeros((img.height, img.width)))
    return SaliencyMap(minmax_scale(smooth))
