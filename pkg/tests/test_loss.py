import math

import numpy as np
import pytest

from amlris.errors import ShapeError
from amlris.loss import (
    EvalSample,
    PredictionPair,
    format_report,
    iou,
    metrics_report,
    miou,
    oiou,
    pixel_prob,
    precision_at,
    seg_loss,
    seg_loss_grad,
)
from amlris.netpbm import MaskBitmap

from conftest import mask_from_rows
from oracles import direct_loss, loss_fd_grad, rel_err


class TestProbability:
    def test_equal_logits_half(self):
        assert np.all(pixel_prob(PredictionPair(np.ones((2, 2)), np.ones((2, 2)))) == 0.5)

    def test_one_vs_zero(self):
        p = pixel_prob(PredictionPair([[1.0]], [[0.0]]))
        assert p[0, 0] == pytest.approx(math.e / (math.e + 1), rel=1e-12)

    def test_huge_margin_saturates_without_nan(self):
        p = pixel_prob(PredictionPair([[1000.0, -1000.0]], [[0.0, 0.0]]))
        np.testing.assert_array_equal(p, [[1.0, 0.0]])

    def test_channel_swap_complements(self, np_rng):
        a, b = np_rng.standard_normal((2, 5, 5)) * 5
        np.testing.assert_allclose(pixel_prob(PredictionPair(a, b)) + pixel_prob(PredictionPair(b, a)), 1.0)

    def test_validation(self):
        with pytest.raises(ShapeError):
            PredictionPair(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ValueError):
            PredictionPair([[np.nan]], [[0.0]])


class TestLoss:
    def test_symmetric_point_ln2(self, np_rng):
        y = np_rng.integers(0, 2, (4, 4))
        assert seg_loss(PredictionPair(np.zeros((4, 4)), np.zeros((4, 4))), y) == pytest.approx(math.log(2), rel=1e-15)

    def test_confident_correct_goes_to_zero(self):
        y = np.array([[1, 0], [0, 1]])
        m = 60.0 * (2 * y - 1)
        assert seg_loss(PredictionPair(m, np.zeros((2, 2))), y) < 1e-25

    def test_confident_wrong_is_finite(self):
        y = np.array([[1, 0]])
        loss = seg_loss(PredictionPair([[-800.0, 800.0]], [[0.0, 0.0]]), y)
        assert loss == pytest.approx(800.0)

    def test_matches_direct_formula(self, np_rng):
        m_pos, m_neg = np_rng.standard_normal((2, 4, 4)) * 3
        y = np_rng.integers(0, 2, (4, 4))
        assert seg_loss(PredictionPair(m_pos, m_neg), y) == pytest.approx(direct_loss(m_pos, m_neg, y), abs=1e-6)

    def test_non_negative(self, np_rng):
        for _ in range(10):
            m_pos, m_neg = np_rng.standard_normal((2, 3, 3)) * 10
            assert seg_loss(PredictionPair(m_pos, m_neg), np_rng.integers(0, 2, (3, 3))) >= 0.0

    def test_accepts_mask_bitmap(self):
        y = MaskBitmap(np.array([[1, 0]], dtype=np.uint8))
        assert seg_loss(PredictionPair([[0.0, 0.0]], [[0.0, 0.0]]), y) == pytest.approx(math.log(2))

    def test_label_shape(self):
        with pytest.raises(ShapeError):
            seg_loss(PredictionPair(np.zeros((2, 2)), np.zeros((2, 2))), np.zeros((3, 3)))


class TestGradient:
    def test_symmetric_point(self):
        g_pos, g_neg = seg_loss_grad(PredictionPair(np.zeros((2, 3)), np.zeros((2, 3))), np.ones((2, 3)))
        np.testing.assert_allclose(g_pos, -0.5 / 6)
        np.testing.assert_array_equal(g_neg, -g_pos)

    def test_finite_differences(self, np_rng):
        m_pos, m_neg = np_rng.standard_normal((2, 8, 8)) * 2
        y = np_rng.integers(0, 2, (8, 8))
        g_pos, g_neg = seg_loss_grad(PredictionPair(m_pos, m_neg), y)
        f_pos, f_neg = loss_fd_grad(m_pos, m_neg, y)
        assert rel_err(g_pos, f_pos) < 1e-4 and rel_err(g_neg, f_neg) < 1e-4


class TestMetrics:
    def _fixture(self):
        # sample A: I=2, U=4 ; sample B: I=3, U=3
        a = EvalSample(mask_from_rows(["1110", "0000"]), mask_from_rows(["0111", "0000"]))
        b = EvalSample(mask_from_rows(["1100", "1000"]), mask_from_rows(["1100", "1000"]))
        return [a, b]

    def test_counts(self):
        assert [s.counts() for s in self._fixture()] == [(2, 4), (3, 3)]

    def test_hand_enumerated(self):
        s = self._fixture()
        assert miou(s) == 0.75
        assert oiou(s) == pytest.approx(5 / 7)
        assert precision_at(s, 0.5) == 0.5
        assert precision_at(s, 0.9) == 0.5

    def test_strict_threshold(self):
        s = self._fixture()[:1]  # iou exactly 0.5
        assert precision_at(s, 0.5) == 0.0

    def test_report_format(self):
        text = format_report(metrics_report(self._fixture()))
        assert text == "miou=75.00\noiou=71.43\np@50=50.00\np@70=50.00\np@90=50.00\n"

    def test_identical_corpus(self):
        m = mask_from_rows(["0110", "0110"])
        assert set(metrics_report([EvalSample(m, m)] * 3).values()) == {100.0}

    def test_empty_masks(self):
        z = mask_from_rows(["00", "00"])
        assert iou(EvalSample(z, z)) == 1.0
        assert oiou([EvalSample(z, z)]) == 1.0

    def test_disjoint(self):
        assert iou(EvalSample(mask_from_rows(["10"]), mask_from_rows(["01"]))) == 0.0

    def test_equal_unions_mean_equals_overall(self):
        a = EvalSample(mask_from_rows(["1100"]), mask_from_rows(["0110"]))
        b = EvalSample(mask_from_rows(["1110"]), mask_from_rows(["1100"]))
        assert oiou([a, b]) == pytest.approx(miou([a, b]))

    def test_errors(self):
        with pytest.raises(ValueError):
            miou([])
        with pytest.raises(ValueError):
            precision_at(self._fixture(), 1.0)
        with pytest.raises(ShapeError):
            EvalSample(mask_from_rows(["1"]), mask_from_rows(["11"]))
