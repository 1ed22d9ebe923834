"""Raster types and file I/O shared by every pipeline stage.

Images are 8-bit, row-major ``(H, W, C)`` arrays with 1 or 3 channels.
Saliency maps are float64 ``(H, W)`` grids in [0, 1], stored on disk as
16-bit single-channel PNGs (65535 maps to 1.0). All types are immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

__all__ = [
    "ImagingError",
    "Image",
    "SaliencyMap",
    "BinaryMask",
    "load_image",
    "save_image",
    "load_saliency",
    "save_saliency",
    "resize_bilinear",
    "resize_image_bilinear",
    "minmax_scale",
]

PathLike = str | os.PathLike


class ImagingError(Exception):
    """Unreadable, unsupported, or malformed image data."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """Decoded 8-bit raster, shape (height, width, channels), channels 1 or 3."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"image must be (H, W, 1|3), got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        if px.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {px.dtype}")
        object.__setattr__(self, "pixels", _freeze(np.ascontiguousarray(px)))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """Per-pixel importance grid, shape (height, width), values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError(f"saliency map must be 2-D, got shape {vals.shape}")
        if vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValueError("saliency map dimensions must be >= 1")
        if not np.isfinite(vals).all():
            raise ValueError("saliency map contains non-finite values")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("saliency values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(np.ascontiguousarray(vals)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground indicator, shape (height, width), True = foreground."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {bits.shape}")
        if bits.dtype != np.bool_:
            bits = bits.astype(np.bool_)
        object.__setattr__(self, "bits", _freeze(np.ascontiguousarray(bits)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

_IMAGE_FORMATS = {"PNG", "JPEG"}


def _open(path: PathLike) -> PILImage.Image:
    try:
        img = PILImage.open(path)
        img.load()
    except FileNotFoundError:
        raise ImagingError(f"no such file: {path}") from None
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImagingError(f"cannot decode {path}: {exc}") from exc
    if img.format not in _IMAGE_FORMATS:
        raise ImagingError(f"unsupported encoding {img.format!r} for {path} (PNG/JPEG only)")
    return img


def load_image(path: PathLike) -> Image:
    """Decode an 8-bit PNG or JPEG. Alpha is stripped; grayscale stays 1-channel."""
    img = _open(path)
    if img.width < 1 or img.height < 1:
        raise ImagingError(f"zero-dimension image: {path}")
    mode = img.mode
    if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise ImagingError(f"{path} is not 8-bit (mode {mode}); use load_saliency for 16-bit maps")
    if mode in ("1", "L"):
        arr = np.asarray(img.convert("L"))
    elif mode == "LA":
        arr = np.asarray(img.convert("LA"))[:, :, 0]
    else:
        # P/PA palettes may hide alpha; go through RGBA and drop it.
        arr = np.asarray(img.convert("RGBA"))[:, :, :3]
    return Image(arr.astype(np.uint8))


def save_image(img: Image, path: PathLike) -> None:
    """Write a lossless PNG; reloading yields identical samples."""
    arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    try:
        PILImage.fromarray(arr).save(path, format="PNG")
    except (FileNotFoundError, OSError) as exc:
        raise ImagingError(f"cannot write {path}: {exc}") from exc


def load_saliency(path: PathLike) -> SaliencyMap:
    """Read a 16-bit grayscale PNG as a MinMax-normalized saliency map.

    Raw samples are scaled by 1/65535 and then MinMax-rescaled so the map
    spans [0, 1]; constant maps are kept as loaded (see minmax_scale).
    """
    img = _open(path)
    if img.mode not in ("I;16", "I;16B", "I;16L", "I"):
        raise ImagingError(
            f"{path} is not a 16-bit single-channel PNG (mode {img.mode})"
        )
    raw = np.asarray(img)
    if raw.ndim != 2:
        raise ImagingError(f"{path} has {raw.ndim} axes; expected single channel")
    if raw.min() < 0 or raw.max() > 65535:
        raise ImagingError(f"{path} holds samples outside 16-bit range")
    return SaliencyMap(minmax_scale(raw.astype(np.float64) / 65535.0))


def save_saliency(sal: SaliencyMap, path: PathLike) -> None:
    """Write a saliency map as a 16-bit grayscale PNG (1.0 maps to 65535)."""
    raw = np.rint(sal.values * 65535.0).astype(np.uint16)
    try:
        PILImage.fromarray(raw).save(path, format="PNG")
    except (FileNotFoundError, OSError) as exc:
        raise ImagingError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Resampling and scaling helpers
# ---------------------------------------------------------------------------


def minmax_scale(values: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1] via (v - min) / (max - min); constant input is returned unchanged."""
    values = np.asarray(values, dtype=np.float64)
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return values.copy()
    return (values - lo) / (hi - lo)


def _bilinear_grid(values: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resample a float grid with half-pixel-centered bilinear interpolation.

    Uses the lerp form v0 + f*(v1 - v0) so constant grids are preserved
    bit-exactly. Accepts (H, W) or (H, W, C) arrays.
    """
    in_h, in_w = values.shape[:2]
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    sx = np.clip(sx, 0.0, in_w - 1.0)
    sy = np.clip(sy, 0.0, in_h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = sx - x0
    fy = sy - y0
    if values.ndim == 3:
        fx = fx[np.newaxis, :, np.newaxis]
        fy = fy[:, np.newaxis, np.newaxis]
    else:
        fx = fx[np.newaxis, :]
        fy = fy[:, np.newaxis]
    v00 = values[np.ix_(y0, x0)]
    v01 = values[np.ix_(y0, x1)]
    v10 = values[np.ix_(y1, x0)]
    v11 = values[np.ix_(y1, x1)]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def resize_bilinear(sal: SaliencyMap, width: int, height: int) -> SaliencyMap:
    """Bilinearly resample a saliency map; output is clamped to [0, 1]."""
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be >= 1")
    if width == sal.width and height == sal.height:
        return sal
    out = _bilinear_grid(sal.values, width, height)
    return SaliencyMap(np.clip(out, 0.0, 1.0))


def resize_image_bilinear(img: Image, width: int, height: int) -> Image:
    """Bilinearly resample an image (used to bring targets onto the source grid)."""
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be >= 1")
    if width == img.width and height == img.height:
        return img
    out = _bilinear_grid(img.pixels.astype(np.float64), width, height)
    return Image(np.clip(np.rint(out), 0, 255).astype(np.uint8))
