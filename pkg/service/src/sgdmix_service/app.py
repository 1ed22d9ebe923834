"""HTTP microservice answering image refinement requests.

The service speaks a small JSON-over-HTTP contract: POST /refine takes a
base64 PNG, a prompt, a strength in [0, 1], and a seed, and answers with a
base64 PNG of the same dimensions. GET /health reports the running mode and
inference settings.

Two modes exist. Stub mode needs no model weights: strength 0 echoes the
input bytes unchanged and strength > 0 applies a seeded Gaussian
perturbation, which is enough to exercise client plumbing end to end.
Model mode wraps an image-to-image diffusion backend loaded from disk;
the backend is resolved through an optional plugin module so the service
itself stays importable on machines without inference packages.
"""

from __future__ import annotations

import base64
import importlib
import io
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image as PILImage

_MODES = ("stub", "model")

# Perturbation sigma on the 0..255 scale at strength 1; scaled linearly by
# strength so plumbing tests can tell strengths apart.
_STUB_NOISE_SCALE = 25.0

_MAX_SEED = 2**64

# Model-mode inference callable: (image, prompt, strength, seed) -> image.
Backend = Callable[[PILImage.Image, str, float, int], PILImage.Image]

# Plugin module consulted when model mode starts without an injected backend.
_BACKEND_MODULE = "sgdmix_service_backend"


class ServiceError(Exception):
    """Raised for invalid service configuration."""


@dataclass(frozen=True)
class ServiceConfig:
    """Runtime settings for one service process.

    mode=model requires model_path. denoise_steps and guidance_scale are
    inference settings surfaced through /health; stub mode ignores them.
    """

    mode: str = "stub"
    model_path: str | None = None
    denoise_steps: int = 25
    guidance_scale: float = 7.5
    bind_address: str = "127.0.0.1:8000"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ServiceError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.mode == "model" and not self.model_path:
            raise ServiceError("model mode requires model_path")
        if self.denoise_steps < 1:
            raise ServiceError("denoise_steps must be >= 1")
        if not (math.isfinite(self.guidance_scale) and self.guidance_scale > 0):
            raise ServiceError("guidance_scale must be a positive finite number")
        split_bind(self.bind_address)


def split_bind(bind_address: str) -> tuple[str, int]:
    """Split "host:port" into its parts.

    Port 0 is accepted (the OS picks an ephemeral port). Raises ServiceError
    when the string has no host, no port, or a port outside 0..65535.
    """
    host, sep, port_text = bind_address.rpartition(":")
    if not sep or not host:
        raise ServiceError(
            f"bind address must look like host:port, got {bind_address!r}"
        )
    try:
        port = int(port_text)
    except ValueError as exc:
        raise ServiceError(f"bind port is not an integer: {port_text!r}") from exc
    if not 0 <= port <= 65535:
        raise ServiceError(f"bind port out of range: {port}")
    return host, port


class _ImageDecodeError(Exception):
    """Request image cannot be decoded; maps to HTTP 422."""


def _decode_png(payload: str) -> PILImage.Image:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (ValueError, TypeError) as exc:
        raise _ImageDecodeError(f"image_png_b64 is not valid base64: {exc}") from exc
    try:
        pil = PILImage.open(io.BytesIO(raw))
        pil.load()
    except Exception as exc:
        raise _ImageDecodeError(f"image_png_b64 is not a decodable image: {exc}") from exc
    if pil.mode not in ("RGB", "L"):
        pil = pil.convert("RGB")
    return pil


def _encode_png(pil: PILImage.Image) -> str:
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def stub_refine(pil: PILImage.Image, strength: float, seed: int) -> PILImage.Image:
    """Seeded Gaussian perturbation; deterministic per (image, strength, seed)."""
    rng = np.random.default_rng(seed)
    arr = np.asarray(pil, dtype=np.float64)
    noisy = arr + rng.standard_normal(arr.shape) * (_STUB_NOISE_SCALE * strength)
    out = np.clip(np.rint(noisy), 0.0, 255.0).astype(np.uint8)
    return PILImage.fromarray(out)


def _import_backend(config: ServiceConfig) -> Backend | None:
    """Resolve the model-mode inference callable from the plugin module.

    Returns None when the plugin is absent; the app still starts and every
    /refine answers 500 until a backend is available.
    """
    try:
        module = importlib.import_module(_BACKEND_MODULE)
    except ImportError:
        return None
    return module.load(
        config.model_path, config.denoise_steps, config.guidance_scale
    )


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def _validate_refine_fields(doc: dict) -> str | None:
    """Returns an error message for a malformed field, or None when valid.

    Booleans are rejected where numbers are expected even though Python
    treats bool as an int subtype.
    """
    image_b64 = doc.get("image_png_b64")
    if not isinstance(image_b64, str):
        return "image_png_b64 must be a string"
    prompt = doc.get("prompt")
    if not isinstance(prompt, str):
        return "prompt must be a string"
    strength = doc.get("strength")
    if isinstance(strength, bool) or not isinstance(strength, (int, float)):
        return "strength must be a number"
    if not (math.isfinite(strength) and 0.0 <= strength <= 1.0):
        return "strength must be in [0, 1]"
    seed = doc.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        return "seed must be an integer"
    if not 0 <= seed < _MAX_SEED:
        return "seed must fit in 64 bits"
    return None


def create_app(config: ServiceConfig | None = None, backend: Backend | None = None) -> FastAPI:
    """Build the ASGI application for a given configuration.

    backend overrides the plugin lookup in model mode, mainly for tests.
    """
    cfg = config if config is not None else ServiceConfig()
    if cfg.mode == "model" and backend is None:
        backend = _import_backend(cfg)

    app = FastAPI(title="sgdmix-service", docs_url=None, redoc_url=None)

    # The body is parsed by hand: the contract distinguishes 400 (malformed
    # body or fields) from 422 (undecodable image), which framework-level
    # validation would conflate.
    @app.post("/refine")
    async def handle_refine(request: Request):
        raw = await request.body()
        try:
            doc = json.loads(raw)
        except (ValueError, UnicodeDecodeError):
            return _error(400, "body is not valid JSON")
        if not isinstance(doc, dict):
            return _error(400, "body must be a JSON object")
        problem = _validate_refine_fields(doc)
        if problem is not None:
            return _error(400, problem)

        try:
            pil = _decode_png(doc["image_png_b64"])
        except _ImageDecodeError as exc:
            return _error(422, str(exc))
        strength = float(doc["strength"])
        seed = doc["seed"]

        if cfg.mode == "stub":
            if strength == 0.0:
                # Echo the input bytes untouched rather than re-encoding.
                return {"image_png_b64": doc["image_png_b64"]}
            return {"image_png_b64": _encode_png(stub_refine(pil, strength, seed))}

        if backend is None:
            return _error(500, "no inference backend is available")
        try:
            out = backend(pil, doc["prompt"], strength, seed)
        except Exception as exc:
            return _error(500, f"backend failure: {exc}")
        if out.size != pil.size:
            return _error(
                500, f"backend returned {out.size}, expected {pil.size}"
            )
        return {"image_png_b64": _encode_png(out)}

    @app.get("/health")
    def handle_health():
        return {
            "mode": cfg.mode,
            "denoise_steps": cfg.denoise_steps,
            "guidance_scale": cfg.guidance_scale,
        }

    return app
