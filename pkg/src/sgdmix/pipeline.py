"""End-to-end dataset augmentation and the downstream training-view sampler.

For every source entry, repeated by the expansion multiplier: draw a
candidate batch, pick the nearest-saliency target, binarize both maps,
union the masks, composite source over target, refine, and record one
manifest line. Generated samples keep the source label as a smoothed
soft vector. All randomness is derived from the master seed per
(entry, repetition, stage), so any worker count yields the same output.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imaging import (
    Image,
    SaliencyMap,
    load_image,
    load_saliency,
    resize_bilinear,
    resize_image_bilinear,
    save_image,
)
from .masking import composite, otsu_threshold, union_masks
from .refinement import (
    NoiseSchedule,
    PromptSpec,
    Refiner,
    RefineError,
    RefineRequest,
    RemoteRefiner,
    refine_identity,
    refine_noise_stub,
)
from .saliency import spectral_residual
from .selection import DatasetIndex, sample_target_batch, select_target

__all__ = [
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
    "MANIFEST_NAME",
    "FAILURES_NAME",
]

MANIFEST_NAME = "manifest.jsonl"
FAILURES_NAME = "failures.jsonl"

_SEED_LIMIT = 2**64

_REFINERS = ("identity", "noise", "remote")
_SALIENCY_SOURCES = ("ingest", "spectral-residual")

# Rec. 601 luma, used only to collapse RGB targets onto gray sources.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class PipelineError(Exception):
    """Configuration or dataset problem that prevents a run from starting."""


@dataclass(frozen=True)
class AugmentationConfig:
    """Run-wide augmentation settings.

    strengths is normalized to a sorted tuple of distinct values so that
    the per-sample draw is stable regardless of how the set was written.
    """

    batch_size: int = 50
    strengths: tuple[float, ...] = (0.5, 0.7, 0.9)
    expansion_multiplier: int = 5
    replacement_probability: float = 0.1
    smoothing_confidence: float = 0.9
    master_seed: int = 0
    refiner: str = "identity"
    endpoint: str | None = None
    saliency_source: str = "ingest"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        strengths = tuple(sorted({float(s) for s in self.strengths}))
        if not strengths:
            raise ValueError("strengths must be a non-empty set")
        if any(not 0.0 <= s <= 1.0 for s in strengths):
            raise ValueError("every strength must lie in [0, 1]")
        object.__setattr__(self, "strengths", strengths)
        if self.expansion_multiplier < 1:
            raise ValueError("expansion_multiplier must be >= 1")
        if not 0.0 <= self.replacement_probability <= 1.0:
            raise ValueError("replacement_probability must lie in [0, 1]")
        if not 0.0 < self.smoothing_confidence <= 1.0:
            raise ValueError("smoothing_confidence must lie in (0, 1]")
        if not 0 <= self.master_seed < _SEED_LIMIT:
            raise ValueError("master_seed must fit in 64 bits")
        if self.refiner not in _REFINERS:
            raise ValueError(f"refiner must be one of {_REFINERS}")
        if self.refiner == "remote" and not self.endpoint:
            raise ValueError("remote refiner needs an endpoint")
        if self.saliency_source not in _SALIENCY_SOURCES:
            raise ValueError(f"saliency_source must be one of {_SALIENCY_SOURCES}")


@dataclass(frozen=True)
class ManifestRecord:
    """One generated sample: provenance, label, and reproduction seeds."""

    generated_path: str
    source_entry_id: int
    target_entry_id: int
    class_id: int
    soft_label: tuple[float, ...]
    strength_used: float
    seeds: tuple[int, int]
    l2_distance: float

    def __post_init__(self):
        label = tuple(float(v) for v in self.soft_label)
        object.__setattr__(self, "soft_label", label)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if abs(sum(label) - 1.0) > 1e-9:
            raise ValueError("soft label must sum to 1 within 1e-9")
        if int(np.argmax(label)) != self.class_id:
            raise ValueError("soft label mass must peak at class_id")
        if len(self.seeds) != 2:
            raise ValueError("seeds must be (batch seed, noise seed)")
        if self.l2_distance < 0:
            raise ValueError("l2_distance must be >= 0")

    def to_dict(self) -> dict:
        return {
            "generated_path": self.generated_path,
            "source_entry_id": self.source_entry_id,
            "target_entry_id": self.target_entry_id,
            "class_id": self.class_id,
            "soft_label": list(self.soft_label),
            "strength_used": self.strength_used,
            "seeds": list(self.seeds),
            "l2_distance": self.l2_distance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ManifestRecord":
        return cls(
            generated_path=doc["generated_path"],
            source_entry_id=doc["source_entry_id"],
            target_entry_id=doc["target_entry_id"],
            class_id=doc["class_id"],
            soft_label=tuple(doc["soft_label"]),
            strength_used=doc["strength_used"],
            seeds=tuple(doc["seeds"]),
            l2_distance=doc["l2_distance"],
        )


@dataclass(frozen=True)
class FailureRecord:
    """One skipped sample and the reason it was skipped."""

    entry_id: int
    repetition: int
    error: str

    def to_dict(self) -> dict:
        return {"entry_id": self.entry_id, "repetition": self.repetition, "error": self.error}


@dataclass
class AugmentResult:
    """Everything a run produced: records, skipped samples, output paths."""

    records: list[ManifestRecord]
    failures: list[FailureRecord]
    manifest_path: str
    failures_path: str


def smooth_label(class_id: int, class_count: int, confidence: float) -> tuple[float, ...]:
    """Soft label: confidence at the true class, the rest spread uniformly."""
    if class_count < 2:
        raise PipelineError("label smoothing needs at least 2 classes")
    if not 1.0 / class_count < confidence <= 1.0:
        raise PipelineError(
            f"confidence {confidence} must lie in (1/{class_count}, 1]"
        )
    if not 0 <= class_id < class_count:
        raise PipelineError(f"class id {class_id} outside 0..{class_count - 1}")
    rest = (1.0 - confidence) / (class_count - 1)
    label = [rest] * class_count
    label[class_id] = confidence
    return tuple(label)


def derive_seed(master_seed: int, entry_id: int, repetition: int, stage: str) -> int:
    """Stable 64-bit per-sample seed for one pipeline stage.

    Hash-derived so samples are independent while the whole run remains a
    pure function of the master seed.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(f"{master_seed}:{entry_id}:{repetition}:{stage}".encode("ascii"))
    return int.from_bytes(h.digest(), "little")


def build_refiner(cfg: AugmentationConfig, schedule: NoiseSchedule | None = None) -> Refiner:
    """Materialize the configured refinement backend as a callable."""
    if cfg.refiner == "identity":
        return refine_identity
    if cfg.refiner == "noise":
        sched = schedule if schedule is not None else NoiseSchedule.linear()
        return lambda req: refine_noise_stub(req, sched)
    return RemoteRefiner(cfg.endpoint)


def _match_channels(img: Image, channels: int) -> Image:
    """Convert an image to the given channel count (replicate or luma-collapse)."""
    if img.channels == channels:
        return img
    if channels == 3:
        return Image(np.repeat(img.pixels, 3, axis=2))
    gray = img.pixels.astype(np.float64) @ _LUMA
    return Image(np.clip(np.rint(gray), 0, 255).astype(np.uint8)[:, :, np.newaxis])


def augment_dataset(
    index: DatasetIndex,
    cfg: AugmentationConfig,
    out_dir: str | os.PathLike,
    workers: int = 1,
    schedule: NoiseSchedule | None = None,
) -> AugmentResult:
    """Run the full augmentation over a dataset and write its manifest.

    Produces expansion_multiplier samples per entry. Refinement failures
    are logged to a failures sidecar and skipped; anything else aborts.
    Output is deterministic for a fixed master seed (identity and noise
    backends), independent of the worker count.
    """
    if len(index) < 2:
        raise PipelineError("augmentation needs at least 2 entries to pick targets from")
    if workers < 1:
        raise PipelineError("workers must be >= 1")
    # Fail fast on bad label parameters before any file is written.
    smooth_label(0, index.class_count, cfg.smoothing_confidence)
    if cfg.saliency_source == "ingest":
        missing = [e.entry_id for e in index.entries if e.saliency_path is None]
        if missing:
            raise PipelineError(
                f"saliency_source=ingest but entries {missing[:5]} carry no saliency path"
            )

    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    refiner = build_refiner(cfg, schedule)

    @lru_cache(maxsize=256)
    def image_of(entry_id: int) -> Image:
        return load_image(index.entries[entry_id].image_path)

    @lru_cache(maxsize=256)
    def map_of(entry_id: int) -> SaliencyMap:
        if cfg.saliency_source == "ingest":
            return load_saliency(index.entries[entry_id].saliency_path)
        return spectral_residual(image_of(entry_id))

    def one(entry_id: int, repetition: int):
        entry = index.entries[entry_id]
        batch_seed = derive_seed(cfg.master_seed, entry_id, repetition, "batch")
        strength_seed = derive_seed(cfg.master_seed, entry_id, repetition, "strength")
        noise_seed = derive_seed(cfg.master_seed, entry_id, repetition, "noise")

        source_img = image_of(entry_id)
        source_map = map_of(entry_id)
        candidate_ids = sample_target_batch(index, entry_id, cfg.batch_size, batch_seed)
        candidates = [
            (cid, resize_bilinear(map_of(cid), source_map.width, source_map.height))
            for cid in candidate_ids
        ]
        outcome = select_target(source_map, candidates)
        target_map = dict(candidates)[outcome.target_entry_id]
        target_img = _match_channels(
            resize_image_bilinear(
                image_of(outcome.target_entry_id), source_img.width, source_img.height
            ),
            source_img.channels,
        )

        mask = union_masks(otsu_threshold(source_map).mask, otsu_threshold(target_map).mask)
        mixed = composite(mask, source_img, target_img)

        strength_rng = np.random.default_rng(strength_seed)
        strength = cfg.strengths[int(strength_rng.integers(len(cfg.strengths)))]
        prompt = PromptSpec(
            class_token=f"<class_{entry.class_id}>",
            metaclass=entry.metaclass or index.classes[entry.class_id],
        )
        try:
            refined = refiner(RefineRequest(mixed, prompt, strength, noise_seed))
        except RefineError as exc:
            return FailureRecord(entry_id, repetition, str(exc))

        name = f"gen_{entry_id:05d}_{repetition:02d}.png"
        save_image(refined, os.path.join(out_dir, name))
        return ManifestRecord(
            generated_path=name,
            source_entry_id=entry_id,
            target_entry_id=outcome.target_entry_id,
            class_id=entry.class_id,
            soft_label=smooth_label(entry.class_id, index.class_count, cfg.smoothing_confidence),
            strength_used=strength,
            seeds=(batch_seed, noise_seed),
            l2_distance=outcome.l2_distance,
        )

    tasks = [
        (entry_id, rep)
        for entry_id in range(len(index))
        for rep in range(cfg.expansion_multiplier)
    ]
    if workers == 1:
        outputs = [one(e, r) for e, r in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(lambda tr: one(*tr), tasks))

    records = [o for o in outputs if isinstance(o, ManifestRecord)]
    failures = [o for o in outputs if isinstance(o, FailureRecord)]
    records.sort(key=lambda r: (r.source_entry_id, r.generated_path))
    failures.sort(key=lambda f: (f.entry_id, f.repetition))

    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    failures_path = os.path.join(out_dir, FAILURES_NAME)
    with open(failures_path, "w", encoding="utf-8") as fh:
        for fail in failures:
            fh.write(json.dumps(fail.to_dict()) + "\n")
    return AugmentResult(records, failures, manifest_path, failures_path)


def load_manifest(path: str | os.PathLike) -> list[ManifestRecord]:
    """Read a manifest written by augment_dataset (one JSON record per line)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(ManifestRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise PipelineError(f"{path}:{line_no}: bad manifest line: {exc}") from exc
    return records


def sample_training_view(
    real_count: int,
    records: list[ManifestRecord],
    p: float,
    seed: int,
) -> list[tuple[int, ManifestRecord | None]]:
    """Compose one training view of real_count slots.

    Each slot is independently replaced by a uniformly drawn generated
    record with probability p; None marks a slot that stays real.
    Deterministic for a fixed seed.
    """
    if real_count < 0:
        raise PipelineError("real_count must be >= 0")
    if not 0.0 <= p <= 1.0:
        raise PipelineError("replacement probability must lie in [0, 1]")
    if p > 0 and not records:
        raise PipelineError("replacement requested but no generated records supplied")
    rng = np.random.default_rng(seed)
    replace = rng.random(real_count) < p
    view: list[tuple[int, ManifestRecord | None]] = []
    for slot in range(real_count):
        if replace[slot]:
            view.append((slot, records[int(rng.integers(len(records)))]))
        else:
            view.append((slot, None))
    return view
