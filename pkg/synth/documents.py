"""
Synthetic Documents - 시드 기반 깨끗한 문서 페이지 생성

흰 배경 위에 2픽셀 높이 텍스트 행(단어 길이의 가로 런)과 가끔 괘선을 그리고
가벼운 anti-aliasing blur(σ=0.7)를 적용합니다.
"""
import logging

import numpy as np

from core.errors import ShapeError, SynthesisError
from core.utils import derive_seed, make_rng
from priors.smoothing import gaussian_filter

logger = logging.getLogger(__name__)

MIN_SIZE = 32
INK_FRACTION_RANGE = (0.02, 0.25)
PAGE_BLUR_SIGMA = 0.7
MAX_PAGE_RETRIES = 8


def ink_fraction(page: np.ndarray) -> float:
    """휘도 < 0.5 픽셀 비율"""
    lum = 0.299 * page[0] + 0.587 * page[1] + 0.114 * page[2]
    return float(np.mean(lum < 0.5))


def _draw_page(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    background = rng.uniform(0.92, 0.98, size=3)
    page = np.broadcast_to(background[:, None, None], (3, h, w)).copy()

    top, bottom = int(round(0.1 * h)), h - int(round(0.1 * h))
    left, right = int(round(0.1 * w)), w - int(round(0.1 * w))
    period = int(rng.integers(5, 8))
    ink = rng.uniform(0.05, 0.25)

    y = top + int(rng.integers(0, period))
    while y + 2 <= bottom:
        # 마지막 단어 위치를 흔들어 행 길이를 다르게
        row_end = right - int(rng.integers(0, max((right - left) // 3, 1)))
        x = left
        while x < row_end:
            word = int(rng.integers(3, 13))
            page[:, y:y + 2, x:min(x + word, row_end)] = ink
            x += word + int(rng.integers(2, 5))
        y += period

    if rng.random() < 0.3:
        for _ in range(int(rng.integers(1, 3))):
            ry = int(rng.integers(top, bottom))
            page[:, ry, left:right] = rng.uniform(0.45, 0.55)

    return np.clip(gaussian_filter(page, PAGE_BLUR_SIGMA), 0.0, 1.0)


def gen_clean_doc(seed: int, h: int, w: int) -> np.ndarray:
    """
    깨끗한 문서 페이지 생성

    ink 비율이 [2%, 25%]를 벗어나면 하위 시드로 다시 그립니다.

    Args:
        seed: 페이지 시드
        h, w: 크기 (32 이상)

    Returns:
        (3, h, w) float32, [0, 1]
    """
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ShapeError(f"gen_clean_doc: 페이지는 {MIN_SIZE}×{MIN_SIZE} 이상이어야 합니다 ({h}x{w})")
    for attempt in range(MAX_PAGE_RETRIES):
        page = _draw_page(make_rng(derive_seed(seed, attempt)), h, w)
        fraction = ink_fraction(page)
        if INK_FRACTION_RANGE[0] <= fraction <= INK_FRACTION_RANGE[1]:
            return page.astype(np.float32)
        logger.debug(f"seed={seed} attempt={attempt}: ink 비율 {fraction:.3f} 범위 밖, 재시도")
    raise SynthesisError(f"gen_clean_doc: seed={seed}에서 ink 비율 조건을 만족하는 페이지를 만들지 못했습니다")
