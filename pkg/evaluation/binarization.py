"""
Binarization Metrics - FM / pFM (skeleton-recall 변형)과 Zhang–Suen 세선화

마스크 규약: ink = 1, 배경 = 0
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.errors import ShapeError

logger = logging.getLogger(__name__)

PFM_VARIANT = "skeleton-recall"


@dataclass
class FMeasureResult:
    """FM/pFM (퍼센트), gt에 ink가 없으면 gt_empty=True이고 두 값 모두 0"""

    fm: float
    pfm: float
    gt_empty: bool = False
    variant: str = PFM_VARIANT


def binarize_output(image: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """
    복원 이미지 → ink 마스크

    Args:
        image: (3, H, W) / (1, H, W) / (H, W), [0, 1]

    Returns:
        (H, W) uint8, 휘도 < threshold 이면 1 (ink)
    """
    array = np.asarray(image, dtype=np.float64)
    if array.ndim == 3:
        if array.shape[0] == 3:
            array = 0.299 * array[0] + 0.587 * array[1] + 0.114 * array[2]
        elif array.shape[0] == 1:
            array = array[0]
        else:
            raise ShapeError(f"binarize_output: 채널 수는 1 또는 3이어야 합니다: {array.shape[0]}")
    return (array < threshold).astype(np.uint8)


def _neighbours(mask: np.ndarray):
    """P2..P9 (북쪽부터 시계 방향)"""
    p = np.pad(mask, 1, mode="constant")
    h, w = mask.shape
    at = lambda dy, dx: p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]  # noqa: E731
    return [at(-1, 0), at(-1, 1), at(0, 1), at(1, 1), at(1, 0), at(1, -1), at(0, -1), at(-1, -1)]


def _thinning_subpass(mask: np.ndarray, first: bool) -> np.ndarray:
    p2, p3, p4, p5, p6, p7, p8, p9 = _neighbours(mask)
    ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
    count = sum(ring[:8])
    transitions = sum(((ring[i] == 0) & (ring[i + 1] == 1)).astype(np.int32) for i in range(8))
    if first:
        cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    return (mask == 1) & (count >= 2) & (count <= 6) & (transitions == 1) & cond


def zhang_suen_thin(mask: np.ndarray) -> np.ndarray:
    """
    Zhang–Suen 세선화 (두 서브패스를 변화가 없을 때까지 반복)

    Args:
        mask: (H, W) {0, 1}
    """
    current = (np.asarray(mask) > 0).astype(np.int32)
    while True:
        changed = False
        for first in (True, False):
            remove = _thinning_subpass(current, first)
            if remove.any():
                current = np.where(remove, 0, current)
                changed = True
        if not changed:
            return current.astype(np.uint8)


def f_measures(pred_binary: np.ndarray, gt_binary: np.ndarray) -> FMeasureResult:
    """
    FM = 2PR/(P+R)·100, pFM은 recall을 gt 골격 기준으로 계산

    Args:
        pred_binary, gt_binary: 같은 shape의 {0, 1} ink 마스크
    """
    pred = np.asarray(pred_binary)
    gt = np.asarray(gt_binary)
    if pred.shape != gt.shape:
        raise ShapeError(f"f_measures: shape 불일치 {pred.shape} vs {gt.shape}")
    if not (np.isin(pred, (0, 1)).all() and np.isin(gt, (0, 1)).all()):
        raise ValueError("f_measures: 입력은 {0, 1} 이진 마스크여야 합니다")
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    if not gt.any():
        logger.warning("f_measures: gt에 ink 픽셀이 없어 FM/pFM을 0으로 정의합니다")
        return FMeasureResult(fm=0.0, pfm=0.0, gt_empty=True)

    tp = int(np.count_nonzero(pred & gt))
    predicted = int(np.count_nonzero(pred))
    precision = tp / predicted if predicted else 0.0
    recall = tp / int(np.count_nonzero(gt))

    skeleton = zhang_suen_thin(gt).astype(bool)
    pseudo_recall = int(np.count_nonzero(pred & skeleton)) / max(int(np.count_nonzero(skeleton)), 1)

    return FMeasureResult(fm=_harmonic(precision, recall), pfm=_harmonic(precision, pseudo_recall))


def _harmonic(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 200.0 * precision * recall / (precision + recall)
