"""Otsu thresholding against the exhaustive oracle, mask union, compositing."""

import numpy as np
import pytest

from sgdmix import (
    BinaryMask,
    Image,
    MaskingError,
    SaliencyMap,
    composite,
    otsu_threshold,
    union_masks,
)

from conftest import otsu_oracle


class TestOtsu:
    def test_two_level_example(self):
        sal = SaliencyMap(np.array([[10 / 255, 10 / 255], [200 / 255, 200 / 255]]))
        res = otsu_threshold(sal)
        assert res.threshold == 10
        assert res.mask.bits.ravel().tolist() == [False, False, True, True]
        assert not res.degenerate

    def test_constant_map_degenerate(self):
        res = otsu_threshold(SaliencyMap(np.full((5, 5), 0.5)))
        assert res.degenerate
        assert res.mask.bits.all()
        assert res.between_class_variance == 0.0
        assert res.threshold == int(np.floor(0.5 * 255))

    def test_bimodal_thousand_pixels(self):
        vals = np.concatenate([np.full(500, 50 / 255), np.full(500, 200 / 255)])
        res = otsu_threshold(SaliencyMap(vals.reshape(25, 40)))
        assert res.threshold == 50
        assert int(res.mask.bits.sum()) == 500

    def test_unit_value_lands_in_top_bin(self):
        sal = SaliencyMap(np.array([[0.0, 1.0]]))
        res = otsu_threshold(sal)
        assert res.threshold == 0
        assert res.mask.bits.tolist() == [[False, True]]

    def test_mask_matches_threshold_rule(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            sal = SaliencyMap(rng.random((16, 16)))
            res = otsu_threshold(sal)
            bins = np.floor(sal.values * 255.0).astype(int)
            assert np.array_equal(res.mask.bits, bins > res.threshold)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            sal = SaliencyMap(rng.random((20, 20)))
            res = otsu_threshold(sal)
            t, var = otsu_oracle(sal.values)
            assert res.threshold == t
            assert res.between_class_variance == var

    def test_oracle_equivalence_bimodal(self):
        rng = np.random.default_rng(43)
        for _ in range(40):
            lo = rng.normal(0.25, 0.05, 150)
            hi = rng.normal(0.8, 0.05, 250)
            vals = np.clip(np.concatenate([lo, hi]), 0.0, 1.0).reshape(20, 20)
            res = otsu_threshold(SaliencyMap(vals))
            t, var = otsu_oracle(vals)
            assert res.threshold == t
            assert res.between_class_variance == var

    def test_smallest_maximizer_wins_ties(self):
        # a gap of empty bins between two clusters yields a plateau of
        # maximizing thresholds; the smallest must be chosen
        vals = np.concatenate([np.full(8, 20 / 255), np.full(8, 220 / 255)])
        res = otsu_threshold(SaliencyMap(vals.reshape(4, 4)))
        t, var = otsu_oracle(vals.reshape(4, 4))
        assert res.threshold == t == 20
        assert res.between_class_variance == var


class TestUnion:
    def test_or_semantics(self):
        a = BinaryMask(np.array([[True, False]]))
        b = BinaryMask(np.array([[False, False]]))
        assert union_masks(a, b).bits.tolist() == [[True, False]]
        c = BinaryMask(np.array([[False, True]]))
        assert union_masks(a, c).bits.tolist() == [[True, True]]

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        a = BinaryMask(rng.random((6, 6)) > 0.5)
        assert np.array_equal(union_masks(a, a).bits, a.bits)

    def test_commutative_associative(self):
        rng = np.random.default_rng(2)
        a, b, c = (BinaryMask(rng.random((5, 5)) > 0.5) for _ in range(3))
        ab = union_masks(a, b)
        ba = union_masks(b, a)
        assert np.array_equal(ab.bits, ba.bits)
        left = union_masks(union_masks(a, b), c)
        right = union_masks(a, union_masks(b, c))
        assert np.array_equal(left.bits, right.bits)

    def test_shape_mismatch(self):
        with pytest.raises(MaskingError):
            union_masks(BinaryMask(np.zeros((2, 2), bool)), BinaryMask(np.zeros((2, 3), bool)))


class TestComposite:
    def _pair(self, rng, shape=(8, 8, 3)):
        a = Image(rng.integers(0, 256, shape).astype(np.uint8))
        b = Image(rng.integers(0, 256, shape).astype(np.uint8))
        return a, b

    def test_all_true_returns_source(self):
        rng = np.random.default_rng(3)
        src, tgt = self._pair(rng)
        mask = BinaryMask(np.ones((8, 8), bool))
        assert np.array_equal(composite(mask, src, tgt).pixels, src.pixels)

    def test_all_false_returns_target(self):
        rng = np.random.default_rng(4)
        src, tgt = self._pair(rng)
        mask = BinaryMask(np.zeros((8, 8), bool))
        assert np.array_equal(composite(mask, src, tgt).pixels, tgt.pixels)

    def test_checkerboard(self):
        white = Image(np.full((4, 4, 3), 255, dtype=np.uint8))
        black = Image(np.zeros((4, 4, 3), dtype=np.uint8))
        board = np.indices((4, 4)).sum(axis=0) % 2 == 0
        out = composite(BinaryMask(board), white, black)
        expect = np.where(board[:, :, None], white.pixels, black.pixels)
        assert np.array_equal(out.pixels, expect)

    def test_same_image_collapse(self):
        rng = np.random.default_rng(5)
        img, _ = self._pair(rng)
        mask = BinaryMask(rng.random((8, 8)) > 0.5)
        assert np.array_equal(composite(mask, img, img).pixels, img.pixels)

    def test_every_pixel_from_one_input(self):
        rng = np.random.default_rng(6)
        src, tgt = self._pair(rng)
        mask_bits = rng.random((8, 8)) > 0.5
        out = composite(BinaryMask(mask_bits), src, tgt).pixels
        from_src = (out == src.pixels).all(axis=2)
        from_tgt = (out == tgt.pixels).all(axis=2)
        assert (from_src | from_tgt).all()
        assert np.array_equal(out[mask_bits], src.pixels[mask_bits])
        assert np.array_equal(out[~mask_bits], tgt.pixels[~mask_bits])

    def test_shape_mismatch(self):
        rng = np.random.default_rng(7)
        src = Image(rng.integers(0, 256, (8, 8, 3)).astype(np.uint8))
        tgt = Image(rng.integers(0, 256, (8, 9, 3)).astype(np.uint8))
        with pytest.raises(MaskingError):
            composite(BinaryMask(np.ones((8, 8), bool)), src, tgt)

    def test_channel_mismatch(self):
        rng = np.random.default_rng(8)
        src = Image(rng.integers(0, 256, (8, 8, 3)).astype(np.uint8))
        tgt = Image(rng.integers(0, 256, (8, 8, 1)).astype(np.uint8))
        with pytest.raises(MaskingError):
            composite(BinaryMask(np.ones((8, 8), bool)), src, tgt)

    def test_mask_size_mismatch(self):
        rng = np.random.default_rng(9)
        src, tgt = self._pair(rng)
        with pytest.raises(MaskingError):
            composite(BinaryMask(np.ones((4, 4), bool)), src, tgt)
