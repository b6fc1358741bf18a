"""
Image IO - PPM/PGM(및 PNG) 이미지 읽기/쓰기

내부 규약: (C, H, W) float32, 값 범위 [0, 1]
"""
import io
import os
from typing import BinaryIO, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from core.errors import ImageFormatError, ShapeError


def _decode(source: Union[str, BinaryIO], label: str) -> np.ndarray:
    try:
        with Image.open(source) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError) as e:
        raise ImageFormatError(f"이미지를 읽을 수 없습니다: {label} ({e})") from None
    return np.ascontiguousarray(rgb.transpose(2, 0, 1))


def read_image(path: str) -> np.ndarray:
    """
    이미지 파일을 (3, H, W) float32 [0,1] 배열로 읽기

    Args:
        path: .ppm / .pgm / .png 경로 (흑백은 3채널로 복제)
    """
    if not os.path.exists(path):
        raise ImageFormatError(f"이미지 파일이 없습니다: {path}")
    return _decode(path, path)


def decode_image(raw: bytes) -> np.ndarray:
    """업로드된 바이트 → (3, H, W) float32"""
    return _decode(io.BytesIO(raw), f"{len(raw)} bytes")


def to_uint8(image: np.ndarray) -> np.ndarray:
    """[0,1] float → uint8 (반올림)"""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def _to_pil(image: np.ndarray) -> Image.Image:
    array = np.asarray(image)
    if array.ndim == 3 and array.shape[0] == 1:
        array = array[0]
    if array.ndim == 3:
        if array.shape[0] != 3:
            raise ShapeError(f"이미지 채널 수는 1 또는 3이어야 합니다: {array.shape[0]}")
        return Image.fromarray(to_uint8(array.transpose(1, 2, 0)))
    if array.ndim == 2:
        return Image.fromarray(to_uint8(array))
    raise ShapeError(f"지원하지 않는 이미지 차원: {array.shape}")


def encode_image(image: np.ndarray, fmt: str = "PPM") -> bytes:
    """(3, H, W) / (H, W) 배열 → PPM(PGM) 또는 PNG 바이트"""
    buffer = io.BytesIO()
    _to_pil(image).save(buffer, format=fmt.upper())
    return buffer.getvalue()


def write_image(path: str, image: np.ndarray) -> None:
    """
    (3, H, W) 또는 (1, H, W)/(H, W) 배열을 8비트 이미지로 저장

    확장자가 .png이면 PNG, 그 외에는 PPM 계열(흑백은 PGM)로 저장합니다.
    """
    pil = _to_pil(image)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    ext = os.path.splitext(path)[1].lower()
    pil.save(path, format="PNG" if ext == ".png" else "PPM")
