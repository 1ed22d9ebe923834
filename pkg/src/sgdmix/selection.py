"""Dataset index handling and nearest-saliency target selection.

For each source image a candidate batch is drawn uniformly (without
replacement, never the source itself) and the candidate whose saliency
map lies closest in squared L2 distance is picked as the mixing target.
Squared distance is kept unnormalized: argmin is scale-invariant.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .imaging import SaliencyMap

__all__ = [
    "SelectionError",
    "IndexEntry",
    "DatasetIndex",
    "SelectionOutcome",
    "load_index",
    "sample_target_batch",
    "select_target",
    "l2_distance",
]


class SelectionError(Exception):
    """Invalid index data or an unsatisfiable selection request."""


@dataclass(frozen=True)
class IndexEntry:
    """One dataset row: image path, optional saliency path, class, stable id."""

    entry_id: int
    image_path: str
    saliency_path: str | None
    class_id: int
    metaclass: str | None = None


@dataclass(frozen=True)
class DatasetIndex:
    """Ordered, read-only collection of dataset entries.

    Entry ids are dense 0..m-1 and equal each entry's position. The index
    is immutable after construction and safe to share across workers.
    """

    classes: tuple[str, ...]
    entries: tuple[IndexEntry, ...] = field(default=())

    def __post_init__(self):
        if not self.classes:
            raise SelectionError("index declares no classes")
        for pos, entry in enumerate(self.entries):
            if entry.entry_id != pos:
                raise SelectionError(
                    f"entry ids must be dense 0..m-1; position {pos} holds id {entry.entry_id}"
                )
            if not 0 <= entry.class_id < len(self.classes):
                raise SelectionError(
                    f"entry {pos} has class {entry.class_id}, only {len(self.classes)} classes declared"
                )

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SelectionOutcome:
    """Winner of a candidate scan plus the evidence behind it."""

    target_entry_id: int
    l2_distance: float
    candidate_ids: tuple[int, ...]

    def __post_init__(self):
        if self.target_entry_id not in self.candidate_ids:
            raise ValueError("selected target is not among the candidates")
        if self.l2_distance < 0:
            raise ValueError("distance must be >= 0")


def load_index(path: str | os.PathLike) -> DatasetIndex:
    """Load a dataset index from JSON.

    Expected shape: {"classes": [...], "entries": [{"image": ...,
    "saliency": ..., "class": ...}, ...]}. The "saliency" key may be
    omitted when maps are computed on the fly; "metaclass" is an optional
    per-entry or top-level prompt hint. Paths are resolved relative to
    the index file.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SelectionError(f"no such index file: {path}") from None
    except json.JSONDecodeError as exc:
        raise SelectionError(f"index {path} is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict):
        raise SelectionError(f"index {path} must hold a JSON object")
    classes = doc.get("classes")
    rows = doc.get("entries")
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise SelectionError(f"index {path}: \"classes\" must be a list of names")
    if not isinstance(rows, list):
        raise SelectionError(f"index {path}: \"entries\" must be a list")

    base = os.path.dirname(os.path.abspath(path))
    default_meta = doc.get("metaclass")
    entries = []
    for pos, row in enumerate(rows):
        if not isinstance(row, dict) or "image" not in row or "class" not in row:
            raise SelectionError(f"index {path}: entry {pos} needs \"image\" and \"class\"")
        class_id = row["class"]
        if not isinstance(class_id, int):
            raise SelectionError(f"index {path}: entry {pos} class must be an integer")
        saliency = row.get("saliency")
        entries.append(
            IndexEntry(
                entry_id=pos,
                image_path=os.path.join(base, row["image"]),
                saliency_path=os.path.join(base, saliency) if saliency else None,
                class_id=class_id,
                metaclass=row.get("metaclass", default_meta),
            )
        )
    return DatasetIndex(tuple(classes), tuple(entries))


def sample_target_batch(
    index: DatasetIndex, source_id: int, n: int, rng_seed: int
) -> list[int]:
    """Draw up to n distinct candidate ids, uniformly, excluding the source.

    Deterministic for a fixed seed. Candidates may share the source's
    class; only the source entry itself is excluded.
    """
    m = len(index)
    if not 0 <= source_id < m:
        raise SelectionError(f"source id {source_id} outside 0..{m - 1}")
    if m < 2:
        raise SelectionError("no valid target: dataset holds a single entry")
    if n < 1:
        raise SelectionError("batch size must be >= 1")
    pool = np.delete(np.arange(m, dtype=np.int64), source_id)
    rng = np.random.default_rng(rng_seed)
    picked = rng.choice(pool, size=min(n, m - 1), replace=False)
    return [int(i) for i in picked]


def l2_distance(a: SaliencyMap, b: SaliencyMap) -> float:
    """Sum of squared per-pixel differences (no pixel-count normalization)."""
    if a.values.shape != b.values.shape:
        raise SelectionError(f"map shapes differ: {a.values.shape} vs {b.values.shape}")
    diff = a.values - b.values
    return float(np.sum(diff * diff))


def select_target(
    source_map: SaliencyMap, candidates: list[tuple[int, SaliencyMap]]
) -> SelectionOutcome:
    """Pick the candidate whose map is closest to the source's in squared L2.

    Candidate maps must already be at the source map's dimensions. Ties
    go to the earliest list position.
    """
    if not candidates:
        raise SelectionError("candidate list is empty")
    best_id = -1
    best_dist = np.inf
    for entry_id, cand_map in candidates:
        dist = l2_distance(source_map, cand_map)
        if dist < best_dist:
            best_id = entry_id
            best_dist = dist
    return SelectionOutcome(
        target_entry_id=best_id,
        l2_distance=float(best_dist),
        candidate_ids=tuple(entry_id for entry_id, _ in candidates),
    )
