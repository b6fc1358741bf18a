"""
Metrics - 복원 품질 지표 (PSNR, SSIM, MS-SSIM)

입력: [0, 1] 범위 (C, H, W) 또는 (H, W) 배열, 계산은 float64
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import ShapeError

logger = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_C1 = SSIM_K1 ** 2
SSIM_C2 = SSIM_K2 ** 2

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass
class MSSSIMResult:
    """MS-SSIM 값과 실제 사용된 스케일 수/가중치"""

    value: float
    scales: int
    weights: List[float] = field(default_factory=list)

    @property
    def reduced(self) -> bool:
        return self.scales < len(MSSSIM_WEIGHTS)


def _as_planes(image: np.ndarray) -> np.ndarray:
    array = np.asarray(image, dtype=np.float64)
    if array.ndim == 2:
        return array[None]
    if array.ndim != 3:
        raise ShapeError(f"(C, H, W) 또는 (H, W) 이미지가 필요합니다 (shape={array.shape})")
    return array


def _check_pair(a: np.ndarray, b: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    a, b = _as_planes(a), _as_planes(b)
    if a.shape != b.shape:
        raise ShapeError(f"{name}: shape 불일치 {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray, cap: float = 99.0) -> float:
    """10·log10(1/MSE) dB, MSE = 0이면 cap"""
    a, b = _check_pair(a, b, "psnr")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return cap
    return float(min(cap, 10.0 * np.log10(1.0 / mse)))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """합이 1인 size×size Gaussian 창"""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _filter_valid(planes: np.ndarray, window: np.ndarray) -> np.ndarray:
    windows = sliding_window_view(planes, window.shape, axis=(1, 2))
    return np.tensordot(windows, window, axes=([-2, -1], [0, 1]))


def ssim_maps(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    채널별 국소 SSIM 맵과 contrast-structure 맵 (valid 필터링)

    Returns:
        (ssim_map, cs_map), 각각 (C, H−10, W−10)
    """
    a, b = _check_pair(a, b, "ssim")
    if min(a.shape[1:]) < SSIM_WINDOW:
        raise ShapeError(f"ssim: 이미지({a.shape[1]}x{a.shape[2]})가 {SSIM_WINDOW}×{SSIM_WINDOW} 창보다 작습니다")
    window = gaussian_window()
    mu_a = _filter_valid(a, window)
    mu_b = _filter_valid(b, window)
    var_a = _filter_valid(a * a, window) - mu_a * mu_a
    var_b = _filter_valid(b * b, window) - mu_b * mu_b
    cov = _filter_valid(a * b, window) - mu_a * mu_b
    cs_map = (2.0 * cov + SSIM_C2) / (var_a + var_b + SSIM_C2)
    lum_map = (2.0 * mu_a * mu_b + SSIM_C1) / (mu_a * mu_a + mu_b * mu_b + SSIM_C1)
    return lum_map * cs_map, cs_map


def ssim_components(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    """(mean SSIM, mean contrast-structure)"""
    ssim_map, cs_map = ssim_maps(a, b)
    return float(ssim_map.mean()), float(cs_map.mean())


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """평균 국소 SSIM (11×11 Gaussian 창 σ=1.5, K1=0.01, K2=0.03, L=1), 채널 평균"""
    return ssim_components(a, b)[0]


def downsample2(image: np.ndarray) -> np.ndarray:
    """2×2 평균 다운샘플 (홀수 끝 행/열은 버림)"""
    planes = _as_planes(image)
    c, h, w = planes.shape
    h2, w2 = h // 2, w // 2
    cropped = planes[:, :2 * h2, :2 * w2]
    return cropped.reshape(c, h2, 2, w2, 2).mean(axis=(2, 4))


def msssim_scales(height: int, width: int, max_scales: int = len(MSSSIM_WEIGHTS)) -> int:
    """가장 거친 스케일이 11 픽셀 이상이 되는 최대 스케일 수"""
    scales = max_scales
    while scales > 1 and min(height, width) // (2 ** (scales - 1)) < SSIM_WINDOW:
        scales -= 1
    return scales


def msssim_weights(scales: int) -> List[float]:
    """앞쪽 scales개 가중치를 합 1로 재정규화"""
    weights = np.asarray(MSSSIM_WEIGHTS[:scales], dtype=np.float64)
    return (weights / weights.sum()).tolist()


def msssim_report(a: np.ndarray, b: np.ndarray) -> MSSSIMResult:
    """
    다중 스케일 SSIM

    스케일 j < n은 contrast-structure 항, 가장 거친 스케일은 SSIM 전체 항을
    가중 지수곱합니다. 이미지가 작으면 스케일 수를 줄이고 가중치를 재정규화합니다.
    """
    a, b = _check_pair(a, b, "msssim")
    scales = msssim_scales(a.shape[1], a.shape[2])
    weights = msssim_weights(scales)
    if scales < len(MSSSIM_WEIGHTS):
        logger.debug(f"msssim: 이미지 {a.shape[1]}x{a.shape[2]}에서 스케일 {scales}개로 축소")
    value = 1.0
    for j, weight in enumerate(weights):
        ssim_value, cs_value = ssim_components(a, b)
        if j == scales - 1:
            value *= max(ssim_value, 0.0) ** weight
        else:
            value *= max(cs_value, 0.0) ** weight
            a, b = downsample2(a), downsample2(b)
    return MSSSIMResult(value=float(value), scales=scales, weights=weights)


def msssim(a: np.ndarray, b: np.ndarray) -> float:
    return msssim_report(a, b).value
