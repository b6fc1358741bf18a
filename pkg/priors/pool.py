"""
Prior Pool - 고주파/저주파 고전 연산자 맵을 10채널로 쌓기

채널 배치는 priors.registry.PRIOR_CHANNELS를 따릅니다.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from core.errors import ShapeError
from core.imageio import write_image
from priors.edges import canny, sobel
from priors.frequency import dct_lowpass
from priors.registry import PRIOR_CHANNELS, channel_filename
from priors.smoothing import gaussian_filter, median_filter

logger = logging.getLogger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class PriorSettings:
    """Prior Pool 연산자 파라미터 (CLI/RunConfig에서 덮어쓰기 가능)"""

    canny_low: float = 0.1
    canny_high: float = 0.3
    median_k: int = 5
    gaussian_sigma: float = 4.0
    dct_keep_frac: float = 0.1


@dataclass
class PriorPool:
    """(10, H, W) prior 스택, 모든 채널 [0, 1]"""

    maps: np.ndarray
    channels: List[str] = field(default_factory=lambda: list(PRIOR_CHANNELS))

    @property
    def shape(self):
        return self.maps.shape

    def channel(self, name: str) -> np.ndarray:
        return self.maps[self.channels.index(name)]

    def channel_means(self) -> Dict[str, float]:
        return {name: float(self.maps[i].mean()) for i, name in enumerate(self.channels)}


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    """
    BT.601 휘도 (3, H, W) → (1, H, W)
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise ShapeError(f"to_luminance: 3채널 (3, H, W) 이미지가 필요합니다 (입력 shape={rgb.shape})")
    gray = np.tensordot(LUMA_WEIGHTS, rgb.astype(np.float64), axes=([0], [0]))
    return gray[None].astype(np.float32)


def _normalize_by_max(values: np.ndarray) -> np.ndarray:
    peak = float(values.max())
    return values / peak if peak > 0 else np.zeros_like(values)


def build_prior_pool(x_d: np.ndarray, settings: PriorSettings = None) -> PriorPool:
    """
    열화 이미지로부터 Prior Pool 생성

    Args:
        x_d: (3, H, W) [0, 1] 열화 이미지
        settings: 연산자 파라미터 (기본값: canny(0.1, 0.3), median k=5, gaussian σ=4, dct 0.1)

    Returns:
        PriorPool (입력과 같은 해상도)
    """
    settings = settings or PriorSettings()
    x_d = np.asarray(x_d, dtype=np.float32)
    gray = to_luminance(x_d)

    gx, gy = sobel(gray)
    edges = canny(gray, settings.canny_low, settings.canny_high)
    median = median_filter(x_d, settings.median_k)
    blurred = gaussian_filter(x_d, settings.gaussian_sigma)
    low = dct_lowpass(gray, settings.dct_keep_frac)

    maps = np.concatenate([
        _normalize_by_max(np.abs(gx)),
        _normalize_by_max(np.abs(gy)),
        edges,
        np.clip(median, 0.0, 1.0),
        np.clip(blurred, 0.0, 1.0),
        low,
    ]).astype(np.float32)
    return PriorPool(maps=maps)


def build_prior_batch(images: np.ndarray, settings: PriorSettings = None) -> np.ndarray:
    """(B, 3, H, W) → (B, 10, H, W)"""
    return np.stack([build_prior_pool(img, settings).maps for img in images])


def write_prior_pool(pool: PriorPool, outdir: str) -> List[str]:
    """채널별 8비트 PGM 저장, 저장된 경로 목록 반환"""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for index in range(pool.maps.shape[0]):
        path = os.path.join(outdir, channel_filename(index))
        write_image(path, pool.maps[index])
        paths.append(path)
    logger.info(f"prior 채널 {len(paths)}개 저장: {outdir}")
    return paths
