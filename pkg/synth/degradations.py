"""
Degradations - 픽셀 태스크별 열화 쌍 생성

모든 입력은 [0, 1]로 clamp되며, 같은 (task, clean, seed)는 비트 단위로 같은 쌍을 만듭니다.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from core.errors import TaskError
from core.utils import make_rng
from models.cpb import BackwardMap
from priors.smoothing import gaussian_filter


@dataclass
class SamplePair:
    """학습/평가용 (입력, 정답) 쌍, bm_gt는 dewarp 쌍에만 존재"""

    input: np.ndarray
    gt: np.ndarray
    task: str
    seed: int
    bm_gt: Optional[BackwardMap] = None


def _coords(h: int, w: int):
    ys, xs = np.meshgrid(np.linspace(-1.0, 1.0, h), np.linspace(-1.0, 1.0, w), indexing="ij")
    return xs, ys


def _deblur(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return gaussian_filter(clean, rng.uniform(1.0, 2.5))


def _deshadow(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, h, w = clean.shape
    xs, ys = _coords(h, w)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    offset = rng.uniform(-0.4, 0.4)
    softness = rng.uniform(0.1, 0.3)
    depth = rng.uniform(0.4, 0.7)
    signed = (xs * np.cos(theta) + ys * np.sin(theta) - offset) / softness
    inside = 0.5 * (np.tanh(0.5 * signed) + 1.0)
    mask = 1.0 - (1.0 - depth) * inside  # ∈ [depth, 1]
    return clean * mask[None]


def _illuminate(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, h, w = clean.shape
    xs, ys = _coords(h, w)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    ramp = xs * np.cos(theta) + ys * np.sin(theta)
    ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-8)
    low = rng.uniform(0.5, 0.7)
    field = low + (1.0 - low) * ramp  # ∈ [0.5, 1]
    return clean * field[None]


def _binarize(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, h, w = clean.shape
    xs, ys = _coords(h, w)
    cx, cy = rng.uniform(-0.6, 0.6, size=2)
    spread = rng.uniform(0.3, 0.6)
    strength = rng.uniform(0.1, 0.3)
    tint = rng.uniform(0.6, 1.0, size=3)
    stain = strength * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * spread ** 2))
    noisy = clean + rng.normal(0.0, 0.08, size=clean.shape) - tint[:, None, None] * stain[None]
    return noisy


def _hw_remove(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, h, w = clean.shape
    out = clean.copy()
    rows, cols = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(1, 4))):
        control = rng.uniform([0, 0], [w - 1, h - 1], size=(4, 2))
        t = np.linspace(0.0, 1.0, 4 * (h + w))[:, None]
        # 3차 베지어 곡선
        curve = ((1 - t) ** 3 * control[0] + 3 * (1 - t) ** 2 * t * control[1]
                 + 3 * (1 - t) * t ** 2 * control[2] + t ** 3 * control[3])
        radius = rng.uniform(0.7, 1.3)
        color = np.array([0.1, 0.1, 0.35]) + rng.uniform(-0.05, 0.05, size=3)
        stroke = np.zeros((h, w), dtype=bool)
        for px, py in curve:
            y0, y1 = max(int(py - radius) - 1, 0), min(int(py + radius) + 2, h)
            x0, x1 = max(int(px - radius) - 1, 0), min(int(px + radius) + 2, w)
            near = (rows[y0:y1, x0:x1] - py) ** 2 + (cols[y0:y1, x0:x1] - px) ** 2 <= radius ** 2
            stroke[y0:y1, x0:x1] |= near
        out[:, stroke] = color[:, None]
    return out


def _denoise(clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return clean + rng.normal(0.0, rng.uniform(0.05, 0.12), size=clean.shape)


DEGRADATIONS: Dict[str, Callable[[np.ndarray, np.random.Generator], np.ndarray]] = {
    "deblur": _deblur,
    "deshadow": _deshadow,
    "illuminate": _illuminate,
    "binarize": _binarize,
    "hw_remove": _hw_remove,
    "denoise": _denoise,
}


def binarize_gt(clean: np.ndarray) -> np.ndarray:
    """휘도 ≥ 0.5 → 1 (배경), 나머지 0 (ink), 3채널 복제"""
    lum = 0.299 * clean[0] + 0.587 * clean[1] + 0.114 * clean[2]
    mask = (lum >= 0.5).astype(np.float32)
    return np.repeat(mask[None], 3, axis=0)


def degrade(task: str, clean: np.ndarray, seed: int) -> SamplePair:
    """
    깨끗한 페이지에 태스크별 열화 적용

    Args:
        task: 픽셀 태스크 이름 (dewarp 제외)
        clean: (3, H, W) [0, 1]
        seed: 열화 시드

    Raises:
        TaskError: dewarp 또는 알 수 없는 태스크
    """
    if task == "dewarp":
        raise TaskError("dewarp 쌍은 degrade가 아니라 gen_warp_pair로 생성합니다")
    if task not in DEGRADATIONS:
        raise TaskError(f"알 수 없는 열화 태스크: {task} (가능: {', '.join(DEGRADATIONS)})")
    clean = np.asarray(clean, dtype=np.float32)
    rng = make_rng(seed, sorted(DEGRADATIONS).index(task))
    degraded = DEGRADATIONS[task](clean.astype(np.float64), rng)
    gt = binarize_gt(clean) if task == "binarize" else clean.copy()
    return SamplePair(
        input=np.clip(degraded, 0.0, 1.0).astype(np.float32),
        gt=gt,
        task=task,
        seed=int(seed),
    )
