
import numpy as np
import pytest

from amlris.afm import (
    AmlConfig,
    BlockMask,
    PixelSet,
    afm,
    apply_mask,
    bilinear_upsample,
    block_aggregate,
    dropout_select,
    weak_pixels,
)
from amlris.errors import ShapeError
from amlris.netpbm import ImageRGB
from amlris.pmme import SimilarityMap

from oracles import naive_bilinear, naive_blocks


class TestUpsample:
    def test_two_by_two_columns(self):
        up = bilinear_upsample(SimilarityMap([[0.0, 1.0], [0.0, 1.0]]), 4, 4)
        for row in up:
            np.testing.assert_allclose(row, [0.0, 0.25, 0.75, 1.0], atol=1e-7)

    def test_same_size_is_identity(self, np_rng):
        g = np_rng.random((5, 6)).astype(np.float32)
        np.testing.assert_array_equal(bilinear_upsample(SimilarityMap(g), 5, 6), g)

    def test_constant_map(self):
        up = bilinear_upsample(SimilarityMap(np.full((3, 3), 0.3)), 17, 11)
        np.testing.assert_allclose(up, 0.3, rtol=1e-6)

    @pytest.mark.parametrize("shape,size", [((2, 3), (7, 9)), ((4, 4), (32, 32)), ((3, 5), (10, 13))])
    def test_matches_per_pixel_oracle(self, np_rng, shape, size):
        g = np_rng.random(shape)
        np.testing.assert_allclose(bilinear_upsample(SimilarityMap(g), *size), naive_bilinear(g, *size), atol=1e-6)

    def test_rejects_shrinking(self):
        with pytest.raises(ShapeError):
            bilinear_upsample(SimilarityMap(np.ones((4, 4))), 3, 8)


class TestWeakAndDropout:
    def test_weak_strict(self):
        s = np.array([[0.1, 0.4], [0.39, 0.9]], dtype=np.float32)
        assert weak_pixels(s, 0.4).to_set() == {(0, 0), (1, 0)}

    def test_weak_empty_and_full(self):
        s = np.full((3, 3), 0.5)
        assert len(weak_pixels(s, 0.5)) == 0
        assert len(weak_pixels(s, 0.51)) == 9

    def test_pixelset_canonical(self):
        a = PixelSet.from_pixels([(2, 1), (0, 3), (2, 0)])
        assert [tuple(p) for p in a] == [(0, 3), (2, 0), (2, 1)]
        assert len(PixelSet.from_pixels([(1, 1), (1, 1)])) == 1
        with pytest.raises(ValueError):
            PixelSet(np.array([[1, 1], [1, 1]]))
        with pytest.raises(ValueError):
            PixelSet(np.array([[2, 0], [0, 3]]))

    def test_rho_extremes(self):
        weak = weak_pixels(np.zeros((20, 20)), 0.5)
        assert dropout_select(weak, 0.0, 3) == weak
        assert len(dropout_select(weak, 1.0, 3)) == 0

    def test_keep_fraction(self):
        weak = weak_pixels(np.zeros((250, 400)), 0.5)
        frac = len(dropout_select(weak, 0.25, 11)) / len(weak)
        assert 0.745 <= frac <= 0.755

    def test_dropout_deterministic_subset(self):
        weak = weak_pixels(np.zeros((30, 30)), 0.5)
        a, b = dropout_select(weak, 0.4, 8), dropout_select(weak, 0.4, 8)
        assert a == b and a.to_set() <= weak.to_set()

    def test_rho_range(self):
        with pytest.raises(ValueError):
            dropout_select(PixelSet.from_pixels([]), 1.2, 0)


class TestBlocks:
    def test_matches_brute_force(self, np_rng):
        for _ in range(20):
            h, w = np_rng.integers(5, 40, size=2)
            bh, bw = np_rng.integers(1, 12, size=2)
            n = int(np_rng.integers(0, 15))
            pix = {(int(np_rng.integers(h)), int(np_rng.integers(w))) for _ in range(n)}
            m = block_aggregate(PixelSet.from_pixels(pix), h, w, bh, bw)
            np.testing.assert_array_equal(m.pixel_mask(), naive_blocks(pix, h, w, bh, bw))

    def test_grid_ceil(self):
        m = block_aggregate(PixelSet.from_pixels([(9, 9)]), 10, 10, 4, 4)
        assert (m.rows, m.cols) == (3, 3) and m.bits[2, 2] == 1
        assert m.pixel_mask()[8:, 8:].all() and m.pixel_mask().sum() == 4

    def test_out_of_bounds(self):
        with pytest.raises(ShapeError):
            block_aggregate(PixelSet.from_pixels([(10, 0)]), 10, 10, 4, 4)

    def test_apply_mask_zeroes_exactly_blocks(self, gradient_image):
        m = block_aggregate(PixelSet.from_pixels([(0, 0), (15, 9)]), 16, 16, 4, 4)
        out = apply_mask(gradient_image, m)
        pm = m.pixel_mask().astype(bool)
        assert np.all(out.pixels[pm] == 0)
        np.testing.assert_array_equal(out.pixels[~pm], gradient_image.pixels[~pm])
        assert apply_mask(out, m) == out

    def test_bitmap_roundtrip(self):
        m = block_aggregate(PixelSet.from_pixels([(3, 5)]), 12, 12, 4, 4)
        assert BlockMask.from_bitmap(m.to_bitmap(), 4, 4, 12, 12) == m


class TestAfm:
    def _cfg(self, **kw):
        base = dict(tau=0.4, rho=0.25, block_h=4, block_w=4, d_a=16, grid_h=4, grid_w=4, seed=5)
        base.update(kw)
        return AmlConfig(**base)

    def test_all_high_untouched(self, gradient_image):
        out, mask = afm(SimilarityMap(np.ones((4, 4))), gradient_image, self._cfg())
        assert out == gradient_image and mask.masked_fraction == 0.0

    def test_all_low_no_dropout_blanks(self, gradient_image):
        out, mask = afm(SimilarityMap(np.zeros((4, 4))), gradient_image, self._cfg(rho=0.0))
        assert np.all(out.pixels == 0) and mask.masked_fraction == 1.0

    def test_tau_monotone(self, np_rng, gradient_image):
        s = SimilarityMap(np_rng.random((4, 4)))
        prev = None
        for tau in np.linspace(0.0, 1.0, 11):
            _, m = afm(s, gradient_image, self._cfg(tau=float(tau), rho=0.0))
            cur = m.pixel_mask().astype(bool)
            if prev is not None:
                assert np.all(cur >= prev)
            prev = cur

    def test_composition(self, np_rng, gradient_image):
        cfg = self._cfg()
        s = SimilarityMap(np_rng.random((4, 4)))
        out, mask = afm(s, gradient_image, cfg)
        sel = dropout_select(weak_pixels(bilinear_upsample(s, 16, 16), cfg.tau), cfg.rho, cfg.seed)
        expected = block_aggregate(sel, 16, 16, 4, 4)
        assert mask == expected and out == apply_mask(gradient_image, expected)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            self._cfg(tau=1.5)
        with pytest.raises(ValueError):
            self._cfg(block_h=0)

    def test_image_dtype(self, gradient_image):
        out, _ = afm(SimilarityMap(np.zeros((4, 4))), gradient_image, self._cfg())
        assert isinstance(out, ImageRGB) and out.pixels.dtype == np.uint8
