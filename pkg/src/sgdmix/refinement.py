"""Refinement backends: identity, forward-noise stub, and remote HTTP.

The translation strength s maps to a diffusion timestep floor(s*T); the
stub applies the closed-form forward noising at that timestep and stops
there, so strength semantics stay observable and deterministic without
any denoising model. Real denoising lives behind the remote service.
"""

from __future__ import annotations

import base64
import io
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np
import requests
from PIL import Image as PILImage

from .imaging import Image

__all__ = [
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
    "encode_image_png_b64",
    "decode_image_png_b64",
]

_SEED_LIMIT = 2**64


class RefineError(Exception):
    """Base class for refinement failures."""


class RefineTransportError(RefineError):
    """Endpoint unreachable or request timed out."""


class RefineStatusError(RefineError):
    """Service answered with a non-success status."""

    def __init__(self, status: int, detail: str):
        super().__init__(f"service returned {status}: {detail}")
        self.status = status
        self.detail = detail


class RefineProtocolError(RefineError):
    """Response body violates the wire contract."""


class RefineDimensionError(RefineError):
    """Service returned an image with the wrong dimensions."""


@dataclass(frozen=True)
class PromptSpec:
    """Structured conditioning prompt: a learned token plus a coarse noun."""

    class_token: str
    metaclass: str

    def render(self) -> str:
        return f"a photo of a {self.class_token} {self.metaclass}"


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Forward-process schedule: betas and their cumulative alpha products."""

    total_steps: int
    betas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        bars = np.asarray(self.alpha_bars, dtype=np.float64)
        if len(betas) != self.total_steps or len(bars) != self.total_steps:
            raise ValueError("betas and alpha_bars must both have total_steps entries")
        if not ((bars > 0) & (bars < 1)).all():
            raise ValueError("alpha_bars must lie strictly inside (0, 1)")
        if not (np.diff(bars) < 0).all():
            raise ValueError("alpha_bars must be strictly decreasing")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", bars)

    @classmethod
    def linear(
        cls, total_steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02
    ) -> "NoiseSchedule":
        """Standard linear beta schedule (1e-4 to 0.02 over 1000 steps)."""
        betas = np.linspace(beta_start, beta_end, total_steps)
        return cls(total_steps, betas, np.cumprod(1.0 - betas))


@dataclass(frozen=True)
class RefineRequest:
    """One refinement job: image, prompt, translation strength, noise seed."""

    image: Image
    prompt: PromptSpec
    strength: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength {self.strength} outside [0, 1]")
        if not 0 <= self.seed < _SEED_LIMIT:
            raise ValueError("seed must fit in 64 bits")


Refiner = Callable[[RefineRequest], Image]


def forward_noise_floats(
    x0: np.ndarray, strength: float, schedule: NoiseSchedule, seed: int
) -> np.ndarray:
    """Forward-noise a [-1, 1] float array; returns the pre-quantization field.

    x = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps at t = floor(strength * T).
    Strength 0 returns x0 unchanged.
    """
    t = int(np.floor(strength * schedule.total_steps))
    if t == 0:
        return np.array(x0, dtype=np.float64, copy=True)
    abar = float(schedule.alpha_bars[t - 1])
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(np.shape(x0))
    return np.sqrt(abar) * np.asarray(x0, dtype=np.float64) + np.sqrt(1.0 - abar) * eps


def forward_noise(img: Image, strength: float, schedule: NoiseSchedule, seed: int) -> Image:
    """Apply forward noising to an 8-bit image; strength 0 is byte-identity."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength {strength} outside [0, 1]")
    t = int(np.floor(strength * schedule.total_steps))
    if t == 0:
        return img
    x0 = img.pixels.astype(np.float64) / 127.5 - 1.0
    noised = forward_noise_floats(x0, strength, schedule, seed)
    back = (np.clip(noised, -1.0, 1.0) + 1.0) * 127.5
    return Image(np.clip(np.rint(back), 0, 255).astype(np.uint8))


def refine_identity(req: RefineRequest) -> Image:
    """Pass-through backend; isolates the mixing stage in tests."""
    return req.image


def refine_noise_stub(req: RefineRequest, schedule: NoiseSchedule | None = None) -> Image:
    """Forward-noise-only backend; deterministic per (image, strength, seed)."""
    if schedule is None:
        schedule = NoiseSchedule.linear()
    return forward_noise(req.image, req.strength, schedule, req.seed)


# ---------------------------------------------------------------------------
# Remote backend
# ---------------------------------------------------------------------------


def encode_image_png_b64(img: Image) -> str:
    arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    buf = io.BytesIO()
    PILImage.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image_png_b64(payload: str) -> Image:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (ValueError, TypeError) as exc:
        raise RefineProtocolError(f"response image is not valid base64: {exc}") from exc
    try:
        pil = PILImage.open(io.BytesIO(raw))
        pil.load()
    except Exception as exc:
        raise RefineProtocolError(f"response image is not a decodable PNG: {exc}") from exc
    arr = np.asarray(pil.convert("RGB") if pil.mode not in ("L",) else pil)
    return Image(arr.astype(np.uint8))


def refine_remote(req: RefineRequest, endpoint: str, timeout: float = 30.0) -> Image:
    """Send one refinement job over HTTP and decode the produced image.

    Failure modes are surfaced as distinct exception types (transport,
    status, protocol, dimensions) so callers can log and skip per sample.
    """
    url = endpoint.rstrip("/") + "/refine"
    body = {
        "image_png_b64": encode_image_png_b64(req.image),
        "prompt": req.prompt.render(),
        "strength": req.strength,
        "seed": req.seed,
    }
    try:
        resp = requests.post(url, json=body, timeout=timeout)
    except requests.exceptions.RequestException as exc:
        raise RefineTransportError(f"cannot reach {url}: {exc}") from exc

    if resp.status_code != 200:
        try:
            detail = resp.json().get("error", resp.text)
        except ValueError:
            detail = resp.text
        raise RefineStatusError(resp.status_code, str(detail))

    try:
        doc = resp.json()
    except ValueError as exc:
        raise RefineProtocolError(f"response is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("image_png_b64"), str):
        raise RefineProtocolError("response lacks an \"image_png_b64\" string field")

    out = decode_image_png_b64(doc["image_png_b64"])
    if (out.height, out.width) != (req.image.height, req.image.width):
        raise RefineDimensionError(
            f"service returned {out.width}x{out.height}, "
            f"expected {req.image.width}x{req.image.height}"
        )
    return out


class RemoteRefiner:
    """Shareable remote backend with a bound on concurrent in-flight requests."""

    def __init__(self, endpoint: str, timeout: float = 30.0, max_in_flight: int = 4):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.endpoint = endpoint
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def __call__(self, req: RefineRequest) -> Image:
        with self._gate:
            return refine_remote(req, self.endpoint, self.timeout)
