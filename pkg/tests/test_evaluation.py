"""
지표와 손실 테스트
"""
import numpy as np
import pytest

from autograd.gradcheck import gradcheck
from autograd.tensor import Tensor, float64_mode
from core.errors import ConfigError, ShapeError, TaskError
from evaluation.binarization import binarize_output, f_measures, zhang_suen_thin
from evaluation.losses import (
    FrequencyBand,
    LossWeights,
    cpb_loss,
    freq_loss,
    l1_loss,
    lowpass,
    task_loss,
)
from evaluation.metrics import MSSSIM_WEIGHTS, msssim, msssim_report, msssim_scales, msssim_weights, psnr, ssim
from models.cpb import BackwardMap
from models.tasks import TaskRegistry


# =============================================================================
# 품질 지표
# =============================================================================

class TestPSNR:

    def test_known_value(self):
        a = np.zeros((3, 8, 8))
        b = np.full((3, 8, 8), 0.1)
        assert psnr(a, b) == pytest.approx(20.0)

    def test_identical_images_hit_cap(self, page):
        assert psnr(page, page) == 99.0
        assert psnr(page, page, cap=60.0) == 60.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))


class TestSSIM:

    def test_identical_is_one(self, page):
        assert ssim(page, page) == pytest.approx(1.0)
        assert msssim(page, page) == pytest.approx(1.0)

    def test_degradation_lowers_score(self, page, rng):
        noisy = np.clip(page + rng.normal(0, 0.2, page.shape), 0, 1)
        assert ssim(page, noisy) < 0.9
        assert msssim(page, noisy) < 1.0

    def test_too_small_for_window(self):
        with pytest.raises(ShapeError):
            ssim(np.zeros((1, 8, 8)), np.zeros((1, 8, 8)))

    def test_scale_reduction(self):
        assert msssim_scales(256, 256) == 5
        assert msssim_scales(32, 32) == 2
        assert msssim_scales(16, 40) == 1

    def test_weights_renormalized(self):
        assert sum(msssim_weights(5)) == pytest.approx(1.0)
        assert msssim_weights(5) == pytest.approx(list(MSSSIM_WEIGHTS), abs=1e-3)
        weights = msssim_weights(2)
        assert sum(weights) == pytest.approx(1.0)
        assert weights[0] / weights[1] == pytest.approx(MSSSIM_WEIGHTS[0] / MSSSIM_WEIGHTS[1])

    def test_report_records_scales(self, page):
        report = msssim_report(page, page)
        assert report.scales == 2 and report.reduced
        assert len(report.weights) == 2


# =============================================================================
# 이진화 지표
# =============================================================================

class TestFMeasure:

    def test_half_recall(self):
        gt = np.array([[1, 1, 1, 1]], dtype=np.uint8)
        pred = np.array([[1, 1, 0, 0]], dtype=np.uint8)
        result = f_measures(pred, gt)
        assert result.fm == pytest.approx(66.6667, abs=1e-3)
        assert not result.gt_empty

    def test_perfect_prediction(self):
        gt = np.zeros((9, 9), dtype=np.uint8)
        gt[2:7, 2:7] = 1
        result = f_measures(gt, gt)
        assert result.fm == pytest.approx(100.0)
        assert result.pfm == pytest.approx(100.0)

    def test_empty_ground_truth(self):
        result = f_measures(np.ones((4, 4), dtype=np.uint8), np.zeros((4, 4), dtype=np.uint8))
        assert result.gt_empty
        assert result.fm == 0.0 and result.pfm == 0.0

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            f_measures(np.full((2, 2), 2), np.ones((2, 2)))

    def test_thinning_reduces_bar_to_line(self):
        mask = np.zeros((7, 12), dtype=np.uint8)
        mask[2:5, 1:11] = 1
        skeleton = zhang_suen_thin(mask)
        assert skeleton.sum() > 0
        assert skeleton.sum() < mask.sum()
        assert np.all(skeleton <= mask)
        assert skeleton[3, 3:9].all()

    def test_binarize_output_marks_dark_pixels(self):
        image = np.ones((3, 2, 2))
        image[:, 0, 0] = 0.1
        np.testing.assert_array_equal(binarize_output(image), [[1, 0], [0, 0]])


# =============================================================================
# 손실
# =============================================================================

class TestLosses:

    def test_lowpass_keeps_constant(self):
        x = Tensor(np.full((1, 2, 9, 9), 0.7))
        np.testing.assert_allclose(lowpass(x, 2.0).data, 0.7, atol=1e-6)

    def test_high_band_of_constant_is_zero(self):
        x = Tensor(np.full((1, 1, 9, 9), 0.3))
        np.testing.assert_allclose(FrequencyBand("high", 2.0).apply(x).data, 0.0, atol=1e-6)

    def test_band_validation(self):
        with pytest.raises(ConfigError):
            FrequencyBand("mid")
        with pytest.raises(ConfigError):
            LossWeights(beta1=-1.0)

    def test_l1(self):
        assert l1_loss(np.zeros((1, 1, 2, 2)), np.full((1, 1, 2, 2), 0.5)).item() == pytest.approx(0.5)

    @pytest.mark.parametrize("task, band, beta", [("deshadow", "low", 1.0), ("deblur", "high", 0.1)])
    def test_task_loss_uses_band_weight(self, rng, task, band, beta):
        pred = rng.random((1, 3, 12, 12))
        gt = rng.random((1, 3, 12, 12))
        expected = l1_loss(pred, gt).item() + beta * freq_loss(pred, gt, FrequencyBand(band, 2.0)).item()
        assert task_loss(pred, gt, task).item() == pytest.approx(expected, rel=1e-5)

    def test_task_loss_without_frequency_term(self, rng):
        pred = rng.random((1, 3, 12, 12))
        gt = rng.random((1, 3, 12, 12))
        assert task_loss(pred, gt, "deshadow", use_freq=False).item() == pytest.approx(l1_loss(pred, gt).item())

    def test_task_loss_custom_weights(self, rng):
        pred = rng.random((1, 3, 12, 12))
        gt = rng.random((1, 3, 12, 12))
        weights = LossWeights(beta1=0.0, beta2=0.0)
        assert task_loss(pred, gt, "deblur", weights).item() == pytest.approx(l1_loss(pred, gt).item())

    def test_task_loss_unknown_task(self, rng):
        x = rng.random((1, 3, 8, 8))
        with pytest.raises(TaskError):
            task_loss(x, x, "denoise", registry=TaskRegistry(slots=2, tasks=["deblur"]))

    def test_task_loss_gradients(self, rng):
        registry = TaskRegistry(slots=2, tasks=["deblur", "deshadow"])
        with float64_mode():
            pred = Tensor(rng.random((1, 2, 8, 8)), requires_grad=True)
            gt = Tensor(rng.random((1, 2, 8, 8)))
            for name in ("deblur", "deshadow"):
                error = gradcheck(lambda: task_loss(pred, gt, name, registry=registry), [pred],
                                  eps=1e-6, samples_per_tensor=16, rng=rng)
                assert error < 1e-4

    def test_cpb_loss(self):
        identity = BackwardMap.identity(4)
        shifted = BackwardMap(grid=identity.grid + 0.25)
        assert cpb_loss(identity, identity).item() == 0.0
        assert cpb_loss(shifted, identity).item() == pytest.approx(0.25, abs=1e-6)
        with pytest.raises(ShapeError):
            cpb_loss(BackwardMap.identity(3), identity)
