"""
Core Utils - 공통 유틸리티 함수
"""
import json
import os
from typing import Any, Dict, Tuple

import numpy as np


def derive_seed(*parts: int) -> int:
    """
    여러 정수로부터 결정적인 하위 시드 생성

    Args:
        parts: (seed, iteration, index, ...) 형태의 정수들

    Returns:
        64비트 범위의 정수 시드
    """
    state = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(state.generate_state(1, dtype=np.uint64)[0])


def make_rng(*parts: int) -> np.random.Generator:
    """derive_seed 기반 PCG64 생성기"""
    return np.random.default_rng(derive_seed(*parts))


def dumps_json(obj: Any) -> str:
    """키 정렬된 결정적 JSON 문자열"""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, default=_json_default)


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"JSON 직렬화 불가: {type(value).__name__}")


def write_json(path: str, obj: Any) -> None:
    """JSON 파일 저장 (상위 디렉토리 자동 생성)"""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, ensure_ascii=False, indent=2, default=_json_default)


def read_json(path: str) -> Dict:
    """JSON 파일 읽기"""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def pad_to_multiple(image: np.ndarray, multiple: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """
    (C, H, W) 이미지를 multiple의 배수 크기로 reflect 패딩

    Returns:
        (패딩된 이미지, 원래 (H, W))
    """
    _, h, w = image.shape
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h == 0 and pad_w == 0:
        return image.copy(), (h, w)
    # reflect는 패딩이 축 길이 이상이면 반복 반사되므로 작은 이미지도 처리됨
    mode = "reflect" if min(h, w) > 1 else "edge"
    padded = np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)), mode=mode)
    return padded, (h, w)


def crop_to(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """pad_to_multiple의 역연산"""
    h, w = size
    return np.ascontiguousarray(image[..., :h, :w])
