"""Index loading, batch sampling, and nearest-saliency target selection."""

import json

import numpy as np
import pytest

from sgdmix import (
    DatasetIndex,
    IndexEntry,
    SaliencyMap,
    SelectionError,
    l2_distance,
    load_index,
    sample_target_batch,
    select_target,
)

from conftest import selection_oracle


def small_index(m=10, classes=3):
    entries = tuple(
        IndexEntry(i, f"img_{i}.png", f"sal_{i}.png", i % classes) for i in range(m)
    )
    return DatasetIndex(tuple(f"c{k}" for k in range(classes)), entries)


class TestDatasetIndex:
    def test_valid(self):
        idx = small_index()
        assert len(idx) == 10
        assert idx.class_count == 3

    def test_rejects_sparse_ids(self):
        entries = (IndexEntry(0, "a.png", None, 0), IndexEntry(2, "b.png", None, 0))
        with pytest.raises(SelectionError):
            DatasetIndex(("c0",), entries)

    def test_rejects_class_out_of_range(self):
        entries = (IndexEntry(0, "a.png", None, 5),)
        with pytest.raises(SelectionError):
            DatasetIndex(("c0",), entries)

    def test_rejects_no_classes(self):
        with pytest.raises(SelectionError):
            DatasetIndex((), ())


class TestLoadIndex:
    def test_round_trip(self, toy_index_path):
        idx = load_index(toy_index_path)
        assert len(idx) == 10
        assert idx.classes == ("ant", "bee", "cat")
        assert all(e.entry_id == i for i, e in enumerate(idx.entries))
        # paths resolve relative to the index file
        assert all(e.image_path.startswith(str(toy_index_path.parent)) for e in idx.entries)

    def test_saliency_optional(self, tmp_path):
        doc = {"classes": ["x"], "entries": [{"image": "a.png", "class": 0}]}
        path = tmp_path / "index.json"
        path.write_text(json.dumps(doc))
        idx = load_index(path)
        assert idx.entries[0].saliency_path is None

    def test_metaclass_fallbacks(self, tmp_path):
        doc = {
            "classes": ["x", "y"],
            "metaclass": "bird",
            "entries": [
                {"image": "a.png", "class": 0},
                {"image": "b.png", "class": 1, "metaclass": "car"},
            ],
        }
        path = tmp_path / "index.json"
        path.write_text(json.dumps(doc))
        idx = load_index(path)
        assert idx.entries[0].metaclass == "bird"
        assert idx.entries[1].metaclass == "car"

    def test_missing_file(self, tmp_path):
        with pytest.raises(SelectionError):
            load_index(tmp_path / "none.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(SelectionError):
            load_index(path)

    def test_missing_fields(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"classes": ["a"], "entries": [{"image": "x.png"}]}))
        with pytest.raises(SelectionError):
            load_index(path)


class TestSampleTargetBatch:
    def test_two_entry_dataset(self):
        idx = small_index(m=2)
        assert sample_target_batch(idx, 0, 50, 7) == [1]

    def test_cardinality_and_exclusion(self):
        idx = small_index(m=100)
        batch = sample_target_batch(idx, 17, 50, 99)
        assert len(batch) == 50
        assert len(set(batch)) == 50
        assert 17 not in batch

    def test_deterministic(self):
        idx = small_index(m=40)
        a = sample_target_batch(idx, 3, 10, 1234)
        b = sample_target_batch(idx, 3, 10, 1234)
        assert a == b

    def test_seed_changes_batch(self):
        idx = small_index(m=40)
        a = sample_target_batch(idx, 3, 10, 1)
        b = sample_target_batch(idx, 3, 10, 2)
        assert a != b

    def test_single_entry_errors(self):
        entries = (IndexEntry(0, "a.png", None, 0),)
        idx = DatasetIndex(("c0",), entries)
        with pytest.raises(SelectionError):
            sample_target_batch(idx, 0, 5, 0)

    def test_batch_capped_at_population(self):
        idx = small_index(m=5)
        batch = sample_target_batch(idx, 2, 50, 0)
        assert sorted(batch) == [0, 1, 3, 4]

    def test_bad_source_id(self):
        idx = small_index(m=5)
        with pytest.raises(SelectionError):
            sample_target_batch(idx, 9, 5, 0)

    def test_uniformity_rough(self):
        # every candidate should appear with similar frequency over many draws
        idx = small_index(m=6)
        counts = {i: 0 for i in range(6) if i != 2}
        for seed in range(3000):
            for picked in sample_target_batch(idx, 2, 1, seed):
                counts[picked] += 1
        freqs = np.array(list(counts.values())) / 3000
        assert abs(freqs - 0.2).max() < 0.03


class TestSelectTarget:
    def test_zero_distance_winner(self):
        rng = np.random.default_rng(0)
        src = SaliencyMap(rng.random((6, 6)))
        other = SaliencyMap(rng.random((6, 6)))
        outcome = select_target(src, [(4, other), (9, SaliencyMap(src.values.copy()))])
        assert outcome.target_entry_id == 9
        assert outcome.l2_distance == 0.0

    def test_half_constant_distance(self):
        src = SaliencyMap(np.full((5, 4), 0.5))
        same = SaliencyMap(np.full((5, 4), 0.5))
        zero = SaliencyMap(np.zeros((5, 4)))
        outcome = select_target(src, [(0, same), (1, zero)])
        assert outcome.target_entry_id == 0
        assert l2_distance(src, zero) == pytest.approx(0.25 * 20)

    def test_tie_earliest_position(self):
        src = SaliencyMap(np.zeros((3, 3)))
        a = SaliencyMap(np.full((3, 3), 0.5))
        b = SaliencyMap(np.full((3, 3), 0.5))
        outcome = select_target(src, [(7, a), (2, b)])
        assert outcome.target_entry_id == 7

    def test_candidate_ids_recorded(self):
        rng = np.random.default_rng(1)
        src = SaliencyMap(rng.random((4, 4)))
        cands = [(i, SaliencyMap(rng.random((4, 4)))) for i in (3, 1, 8)]
        outcome = select_target(src, cands)
        assert outcome.candidate_ids == (3, 1, 8)
        assert outcome.target_entry_id in outcome.candidate_ids

    def test_empty_candidates(self):
        with pytest.raises(SelectionError):
            select_target(SaliencyMap(np.zeros((2, 2))), [])

    def test_dimension_mismatch(self):
        src = SaliencyMap(np.zeros((2, 2)))
        with pytest.raises(SelectionError):
            select_target(src, [(0, SaliencyMap(np.zeros((3, 3))))])

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            src = SaliencyMap(rng.random((5, 8)))
            count = int(rng.integers(1, 30))
            cands = [(int(i), SaliencyMap(rng.random((5, 8)))) for i in range(count)]
            outcome = select_target(src, cands)
            oid, odist = selection_oracle(src.values, [(i, c.values) for i, c in cands])
            assert outcome.target_entry_id == oid
            assert outcome.l2_distance == pytest.approx(odist, rel=1e-12, abs=1e-12)

    def test_selected_distance_is_minimal(self):
        rng = np.random.default_rng(78)
        src = SaliencyMap(rng.random((7, 7)))
        cands = [(i, SaliencyMap(rng.random((7, 7)))) for i in range(20)]
        outcome = select_target(src, cands)
        for _, cand in cands:
            assert outcome.l2_distance <= l2_distance(src, cand)
