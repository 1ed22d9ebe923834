"""Figure rendering for augmentation manifests.

Reads the JSONL manifest a run produced and writes summary figures next
to it: the distance distribution of chosen targets, per-class sample
counts, and the strength mix actually drawn.
"""

from __future__ import annotations

import os
from collections import Counter

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pipeline import ManifestRecord

__all__ = ["render_report"]


def render_report(
    records: list[ManifestRecord],
    out_dir: str | os.PathLike,
    class_names: list[str] | None = None,
) -> list[str]:
    """Render summary figures for a set of manifest records.

    Returns the list of written file paths. class_names, when given,
    labels the per-class axis; otherwise raw class ids are shown.
    """
    if not records:
        raise ValueError("no records to report on")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    distances = [rec.l2_distance for rec in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(distances, bins=30, color="#4878cf", edgecolor="black", linewidth=0.4)
    ax.set_xlabel("squared L2 distance to selected target")
    ax.set_ylabel("samples")
    ax.set_title("Target selection distances")
    path = os.path.join(out_dir, "selection_distances.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    counts = Counter(rec.class_id for rec in records)
    ids = sorted(counts)
    if class_names:
        labels = [class_names[i] if i < len(class_names) else str(i) for i in ids]
    else:
        labels = [str(i) for i in ids]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(ids)), [counts[i] for i in ids], color="#6acc65", edgecolor="black", linewidth=0.4)
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_xlabel("class")
    ax.set_ylabel("generated samples")
    ax.set_title("Generated samples per class")
    path = os.path.join(out_dir, "class_counts.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    strength_counts = Counter(rec.strength_used for rec in records)
    strengths = sorted(strength_counts)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(
        range(len(strengths)),
        [strength_counts[s] for s in strengths],
        color="#d65f5f",
        edgecolor="black",
        linewidth=0.4,
    )
    ax.set_xticks(range(len(strengths)))
    ax.set_xticklabels([f"{s:g}" for s in strengths])
    ax.set_xlabel("translation strength")
    ax.set_ylabel("samples")
    ax.set_title("Strength draw distribution")
    path = os.path.join(out_dir, "strengths.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    return written
