"""Shared fixtures: toy dataset construction and reference oracles."""

import json
import math

import numpy as np
import pytest

from sgdmix import Image, SaliencyMap, save_image, save_saliency

TOY_CLASSES = ["ant", "bee", "cat"]
TOY_SIZE = 24


def make_toy_dataset(root, count=10, seed=1234, size=TOY_SIZE):
    """Write a small image+saliency dataset and its index; returns the index path.

    Classes cycle through TOY_CLASSES. Every saliency map pins one 0.0 and
    one 1.0 pixel so the 16-bit save/load round trip keeps values stable.
    """
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        pixels = rng.integers(0, 256, (size, size, 3)).astype(np.uint8)
        save_image(Image(pixels), str(root / f"img_{i}.png"))
        sal = rng.random((size, size))
        sal[0, 0] = 0.0
        sal[-1, -1] = 1.0
        save_saliency(SaliencyMap(sal), str(root / f"sal_{i}.png"))
        entries.append(
            {"image": f"img_{i}.png", "saliency": f"sal_{i}.png", "class": i % len(TOY_CLASSES)}
        )
    index_path = root / "index.json"
    index_path.write_text(json.dumps({"classes": TOY_CLASSES, "entries": entries}))
    return index_path


@pytest.fixture(scope="session")
def toy_index_path(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_dataset")
    return make_toy_dataset(root)


def otsu_oracle(values):
    """Exhaustive 256-threshold maximizer, pure Python.

    Returns (threshold, between_class_variance) under the same contract:
    bins floor(v*255), foreground strictly above the threshold, smallest
    maximizing threshold wins, single-occupied-bin inputs are degenerate.
    """
    hist = [0] * 256
    for v in values.ravel().tolist():
        hist[math.floor(v * 255.0)] += 1
    occupied = [b for b in range(256) if hist[b]]
    if len(occupied) == 1:
        return occupied[0], 0.0

    total = sum(hist)
    total_sum = sum(b * h for b, h in enumerate(hist))
    best_t = 0
    best_var = -1.0
    n0 = 0
    s0 = 0
    for t in range(256):
        n0 += hist[t]
        s0 += t * hist[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            var = 0.0
        else:
            mu0 = s0 / n0
            mu1 = (total_sum - s0) / n1
            d = mu0 - mu1
            var = (n0 / total) * (n1 / total) * (d * d)
        if var > best_var:
            best_t = t
            best_var = var
    return best_t, best_var


def selection_oracle(source_values, candidates):
    """Brute-force nearest-map scan with fsum accumulation.

    candidates: list of (entry_id, 2-D array). Returns (entry_id, distance);
    ties go to the earliest list position.
    """
    best_id = None
    best_dist = None
    for entry_id, cand in candidates:
        diffs = (source_values - cand).ravel().tolist()
        dist = math.fsum(d * d for d in diffs)
        if best_dist is None or dist < best_dist:
            best_id = entry_id
            best_dist = dist
    return best_id, best_dist


def random_saliency(rng, shape):
    """Uniform random map with its span pinned to exactly [0, 1]."""
    vals = rng.random(shape)
    vals.flat[0] = 0.0
    vals.flat[-1] = 1.0
    return SaliencyMap(vals)
