"""
Smoothing - 저주파 prior용 필터 (median, gaussian)

입력/출력: (C, H, W) numpy 배열, 경계는 reflect 패딩
"""
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import ShapeError


def _check_chw(img: np.ndarray, name: str) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3:
        raise ShapeError(f"{name}: (C, H, W) 배열이 필요합니다 (입력 shape={img.shape})")
    return img


def reflect_pad(img: np.ndarray, pad_h: int, pad_w: int) -> np.ndarray:
    """마지막 두 축 reflect 패딩 (길이 1 축은 edge로 대체)"""
    h, w = img.shape[-2:]
    lead = [(0, 0)] * (img.ndim - 2)
    mode_h = "reflect" if h > 1 else "edge"
    mode_w = "reflect" if w > 1 else "edge"
    out = np.pad(img, lead + [(pad_h, pad_h), (0, 0)], mode=mode_h)
    return np.pad(out, lead + [(0, 0), (pad_w, pad_w)], mode=mode_w)


def median_filter(img: np.ndarray, k: int) -> np.ndarray:
    """
    채널별 k×k median 필터

    salt-and-pepper 노이즈와 희소한 텍스트 픽셀을 제거합니다.

    Args:
        img: (C, H, W)
        k: 홀수 커널 크기 (3 이상)
    """
    img = _check_chw(img, "median_filter")
    if k < 3 or k % 2 == 0:
        raise ShapeError(f"median_filter: k는 3 이상의 홀수여야 합니다: {k}")
    r = k // 2
    padded = reflect_pad(img, r, r)
    windows = sliding_window_view(padded, (k, k), axis=(1, 2))
    return np.median(windows, axis=(-2, -1)).astype(img.dtype)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """반지름 ceil(3σ), 합이 1인 1-D Gaussian 커널"""
    if sigma <= 0:
        raise ValueError(f"gaussian sigma는 0보다 커야 합니다: {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_filter(img: np.ndarray, sigma: float) -> np.ndarray:
    """
    분리 가능한 Gaussian blur (채널별)

    Args:
        img: (C, H, W)
        sigma: 표준편차 (> 0)
    """
    img = _check_chw(img, "gaussian_filter")
    kernel = gaussian_kernel1d(sigma)
    r = kernel.size // 2
    work = img.astype(np.float64)
    padded = reflect_pad(work, r, 0)
    rows = np.tensordot(sliding_window_view(padded, kernel.size, axis=1), kernel, axes=([-1], [0]))
    padded = reflect_pad(rows, 0, r)
    out = np.tensordot(sliding_window_view(padded, kernel.size, axis=2), kernel, axes=([-1], [0]))
    return out.astype(img.dtype if np.issubdtype(img.dtype, np.floating) else np.float32)
