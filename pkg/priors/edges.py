"""
Edges - 고주파 prior용 에지 연산자 (Sobel, Canny)

입력: (1, H, W) 흑백 이미지, 경계는 reflect 패딩
"""
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import ShapeError
from priors.smoothing import gaussian_filter, reflect_pad

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()

CANNY_SIGMA = 1.4


def _check_gray(gray: np.ndarray, name: str) -> np.ndarray:
    gray = np.asarray(gray)
    if gray.ndim != 3 or gray.shape[0] != 1:
        raise ShapeError(f"{name}: (1, H, W) 흑백 이미지가 필요합니다 (입력 shape={gray.shape})")
    return gray


def correlate3x3(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D 평면과 3×3 커널의 reflect 패딩 cross-correlation"""
    padded = reflect_pad(plane.astype(np.float64), 1, 1)
    windows = sliding_window_view(padded, (3, 3))
    return np.tensordot(windows, kernel, axes=([-2, -1], [0, 1]))


def sobel(gray: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    3×3 Sobel 1차 미분

    Returns:
        (gx, gy): 수평/수직 미분, 각각 (1, H, W) 부호 있는 값
    """
    gray = _check_gray(gray, "sobel")
    if gray.shape[1] < 3 or gray.shape[2] < 3:
        raise ShapeError(f"sobel: 이미지가 3×3 커널보다 작습니다 ({gray.shape[1]}x{gray.shape[2]})")
    plane = gray[0]
    gx = correlate3x3(plane, SOBEL_X)[None]
    gy = correlate3x3(plane, SOBEL_Y)[None]
    return gx, gy


# ==================== Canny 단계 ====================

def gradient_field(gray: np.ndarray, sigma: float = CANNY_SIGMA) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gaussian 평활화 후 Sobel gradient → (magnitude, gx, gy), 각각 (H, W)"""
    smoothed = gaussian_filter(gray.astype(np.float64), sigma)
    gx, gy = sobel(smoothed)
    gx, gy = gx[0], gy[0]
    return np.hypot(gx, gy), gx, gy


def quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """gradient 방향을 0/45/90/135도 4개 구간(0..3)으로 양자화"""
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    bins = np.zeros(angle.shape, dtype=np.int64)
    bins[(angle >= 22.5) & (angle < 67.5)] = 1
    bins[(angle >= 67.5) & (angle < 112.5)] = 2
    bins[(angle >= 112.5) & (angle < 157.5)] = 3
    return bins


# 구간별 비교 이웃 (dy, dx): 행은 아래쪽이 +
NMS_OFFSETS = {
    0: ((0, 1), (0, -1)),
    1: ((1, 1), (-1, -1)),
    2: ((1, 0), (-1, 0)),
    3: ((1, -1), (-1, 1)),
}


def non_max_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """gradient 방향의 두 이웃보다 작은 값 제거 (이미지 밖 이웃은 0)"""
    h, w = magnitude.shape
    bins = quantize_direction(gx, gy)
    padded = np.pad(magnitude, 1, mode="constant")
    keep = magnitude > 0
    for direction, ((dy1, dx1), (dy2, dx2)) in NMS_OFFSETS.items():
        n1 = padded[1 + dy1:1 + dy1 + h, 1 + dx1:1 + dx1 + w]
        n2 = padded[1 + dy2:1 + dy2 + h, 1 + dx2:1 + dx2 + w]
        region = bins == direction
        keep &= ~region | ((magnitude >= n1) & (magnitude >= n2))
    return np.where(keep, magnitude, 0.0)


def double_threshold(suppressed: np.ndarray, reference_max: float, low: float, high: float
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """
    최대 gradient 크기 대비 비율로 strong / weak 분류

    Returns:
        (strong, weak) 불리언 마스크
    """
    if reference_max <= 0:
        empty = np.zeros(suppressed.shape, dtype=bool)
        return empty, empty.copy()
    strong = suppressed >= high * reference_max
    weak = (suppressed >= low * reference_max) & ~strong
    return strong, weak


def hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """strong 픽셀에서 시작해 8-연결 weak 픽셀로 flood fill"""
    allowed = strong | weak
    edges = strong.copy()
    h, w = edges.shape
    while True:
        padded = np.pad(edges, 1, mode="constant")
        grown = np.zeros_like(edges)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                grown |= padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        grown &= allowed
        if np.array_equal(grown, edges):
            return edges
        edges = grown


def canny(gray: np.ndarray, low: float = 0.1, high: float = 0.3) -> np.ndarray:
    """
    Canny 에지 검출

    Gaussian(σ=1.4) → Sobel → NMS(4방향) → 이중 임계값 → hysteresis

    Args:
        gray: (1, H, W)
        low, high: 최대 gradient 크기 대비 비율, 0 ≤ low < high

    Returns:
        (1, H, W) {0, 1} 이진 맵
    """
    gray = _check_gray(gray, "canny")
    if not (0 <= low < high):
        raise ValueError(f"canny: 0 ≤ low < high 조건 위반 (low={low}, high={high})")
    magnitude, gx, gy = gradient_field(gray)
    suppressed = non_max_suppression(magnitude, gx, gy)
    strong, weak = double_threshold(suppressed, float(magnitude.max()), low, high)
    edges = hysteresis(strong, weak)
    return edges.astype(np.float32)[None]
