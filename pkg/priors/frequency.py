"""
Frequency - 직교 2-D DCT와 저역 통과 prior
"""
from functools import lru_cache

import numpy as np

from core.errors import ShapeError


@lru_cache(maxsize=32)
def dct_matrix(n: int) -> np.ndarray:
    """직교 DCT-II 행렬 C (C @ Cᵀ = I)"""
    k = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(n, dtype=np.float64)[None, :]
    matrix = np.cos(np.pi * (2.0 * i + 1.0) * k / (2.0 * n))
    matrix[0] *= np.sqrt(1.0 / n)
    matrix[1:] *= np.sqrt(2.0 / n)
    matrix.setflags(write=False)
    return matrix


def dct2(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """
    직교 2-D DCT-II (inverse=True이면 DCT-III)

    Args:
        x: (1, N, N) 정사각 배열

    Returns:
        (1, N, N) float64 계수 (또는 복원 이미지)
    """
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[0] != 1:
        raise ShapeError(f"dct2: (1, N, N) 배열이 필요합니다 (입력 shape={x.shape})")
    if x.shape[1] != x.shape[2]:
        raise ShapeError(f"dct2: 정사각 입력이 필요합니다 (H={x.shape[1]}, W={x.shape[2]})")
    c = dct_matrix(x.shape[1])
    plane = x[0].astype(np.float64)
    out = c.T @ plane @ c if inverse else c @ plane @ c.T
    return out[None]


def lowpass_mask(n: int, keep_frac: float) -> np.ndarray:
    """
    u + v ≤ keep_frac·(2N − 2) 인 계수만 남기는 마스크

    keep_frac = 1이면 모든 계수를 남깁니다. N = 32, keep_frac = 0.1이면 u + v ≤ 6 (28개)입니다.
    """
    u = np.arange(n)[:, None]
    v = np.arange(n)[None, :]
    return (u + v) <= keep_frac * (2 * n - 2)


def dct_lowpass(gray: np.ndarray, keep_frac: float) -> np.ndarray:
    """
    DCT 저역 통과 필터

    edge 복제로 정사각형 패딩 → DCT → 고주파 계수 제거 → 역변환 → 크롭 후 [0,1] clamp

    Args:
        gray: (1, H, W)
        keep_frac: (0, 1], 1이면 모든 계수 유지
    """
    gray = np.asarray(gray)
    if gray.ndim != 3 or gray.shape[0] != 1:
        raise ShapeError(f"dct_lowpass: (1, H, W) 배열이 필요합니다 (입력 shape={gray.shape})")
    if not (0.0 < keep_frac <= 1.0):
        raise ValueError(f"dct_lowpass: keep_frac는 (0, 1] 범위여야 합니다: {keep_frac}")
    _, h, w = gray.shape
    n = max(h, w)
    square = np.pad(gray.astype(np.float64), ((0, 0), (0, n - h), (0, n - w)), mode="edge")
    coeffs = dct2(square)
    coeffs[0][~lowpass_mask(n, keep_frac)] = 0.0
    restored = dct2(coeffs, inverse=True)[:, :h, :w]
    return np.clip(restored, 0.0, 1.0).astype(gray.dtype if np.issubdtype(gray.dtype, np.floating) else np.float32)
