"""학습 손실과 평가 지표"""
from evaluation.binarization import FMeasureResult, binarize_output, f_measures, zhang_suen_thin
from evaluation.losses import FrequencyBand, LossWeights, cpb_loss, freq_loss, l1_loss, lowpass, task_loss
from evaluation.metrics import MSSSIMResult, msssim, msssim_report, psnr, ssim

__all__ = [
    "FMeasureResult",
    "binarize_output",
    "f_measures",
    "zhang_suen_thin",
    "FrequencyBand",
    "LossWeights",
    "cpb_loss",
    "freq_loss",
    "l1_loss",
    "lowpass",
    "task_loss",
    "MSSSIMResult",
    "msssim",
    "msssim_report",
    "psnr",
    "ssim",
]
