"""
Synthetic Warps - 매끄러운 변위장 기반 dewarp 학습 쌍

정규화 좌표 p ∈ [−1, 1]² 에서 forward map φ(p) = p + d(p) (평면 → 왜곡).
왜곡 이미지 D(q) = flat(φ⁻¹(q)), 정답 backward map bm_gt = φ (G×G 격자).
d_x는 (1−u²), d_y는 (1−v²)로 가늘어져 페이지 경계가 경계에 머뭅니다.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from autograd import functional as F
from autograd.tensor import Tensor, no_grad
from core.errors import ShapeError, SynthesisError
from core.utils import derive_seed, make_rng
from evaluation.metrics import psnr
from models.cpb import BackwardMap, dewarp
from synth.degradations import SamplePair
from synth.documents import gen_clean_doc

logger = logging.getLogger(__name__)

# 정규화 좌표 기준 최대 진폭 (페이지 크기의 8%)
MAX_AMPLITUDE = 0.16
MIN_PSNR_DB = 25.0
MAX_WARP_RETRIES = 10
INVERSE_ITERATIONS = 30
JACOBIAN_LIMIT = 0.9


@dataclass(frozen=True)
class SinusoidField:
    """Σ_k a_k·sin(2π f_k (n_k · p) + φ_k) 형태의 변위 성분 (x, y 각각)"""

    amplitudes: np.ndarray  # (2, K)
    frequencies: np.ndarray  # (2, K)
    directions: np.ndarray  # (2, K, 2)
    phases: np.ndarray  # (2, K)

    def displacement(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        out = []
        for axis in range(2):
            proj = (self.directions[axis, :, 0, None, None] * u
                    + self.directions[axis, :, 1, None, None] * v)
            waves = np.sin(2.0 * np.pi * self.frequencies[axis, :, None, None] * proj
                           + self.phases[axis, :, None, None])
            total = np.tensordot(self.amplitudes[axis], waves, axes=([0], [0]))
            taper = 1.0 - (u * u if axis == 0 else v * v)
            out.append(total * taper)
        return out[0], out[1]

    def forward_map(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        dx, dy = self.displacement(u, v)
        return u + dx, v + dy

    def inverse_map(self, qx: np.ndarray, qy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """고정점 반복 p ← q − d(p)"""
        px, py = qx.copy(), qy.copy()
        for _ in range(INVERSE_ITERATIONS):
            dx, dy = self.displacement(px, py)
            px, py = qx - dx, qy - dy
        return px, py


def sample_field(rng: np.random.Generator, amplitude: float) -> SinusoidField:
    """2–4개 저주파 사인파 (0.25–0.6 cycle/정규화 단위), 진폭 합 ≤ amplitude"""
    k = int(rng.integers(2, 5))
    weights = rng.dirichlet(np.ones(k), size=2)
    total = amplitude * rng.uniform(0.5, 1.0, size=(2, 1))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(2, k))
    return SinusoidField(
        amplitudes=weights * total,
        frequencies=rng.uniform(0.25, 0.6, size=(2, k)),
        directions=np.stack([np.cos(angles), np.sin(angles)], axis=-1),
        phases=rng.uniform(0.0, 2.0 * np.pi, size=(2, k)),
    )


def field_is_invertible(field: SinusoidField, samples: int = 65) -> bool:
    """격자 위 Jacobian 검사: det(I + ∇d) > 0, 행 절대합 < JACOBIAN_LIMIT"""
    axis = np.linspace(-1.0, 1.0, samples)
    v, u = np.meshgrid(axis, axis, indexing="ij")
    step = 1e-4
    dxp, dyp = field.displacement(u + step, v)
    dxm, dym = field.displacement(u - step, v)
    dxq, dyq = field.displacement(u, v + step)
    dxn, dyn = field.displacement(u, v - step)
    j11 = (dxp - dxm) / (2 * step)
    j21 = (dyp - dym) / (2 * step)
    j12 = (dxq - dxn) / (2 * step)
    j22 = (dyq - dyn) / (2 * step)
    det = (1 + j11) * (1 + j22) - j12 * j21
    contraction = np.maximum(np.abs(j11) + np.abs(j12), np.abs(j21) + np.abs(j22))
    return bool(np.all(det > 0) and np.all(contraction < JACOBIAN_LIMIT))


def _linspace_grid(h: int, w: int) -> Tuple[np.ndarray, np.ndarray]:
    v, u = np.meshgrid(np.linspace(-1.0, 1.0, h), np.linspace(-1.0, 1.0, w), indexing="ij")
    return u, v


def warp_image(flat: np.ndarray, field: SinusoidField) -> np.ndarray:
    """D(q) = flat(φ⁻¹(q))"""
    _, h, w = flat.shape
    qx, qy = _linspace_grid(h, w)
    px, py = field.inverse_map(qx, qy)
    with no_grad():
        out = F.bilinear_grid_sample(
            Tensor(flat[None], dtype=np.float64),
            Tensor(np.stack([px, py])[None], dtype=np.float64),
        )
    return np.clip(out.data[0], 0.0, 1.0).astype(np.float32)


def backward_map_from_field(field: SinusoidField, G: int) -> BackwardMap:
    u, v = _linspace_grid(G, G)
    bx, by = field.forward_map(u, v)
    grid = np.clip(np.stack([bx, by]), -1.0, 1.0)
    return BackwardMap(grid=grid.astype(np.float32))


def gen_warp_pair(seed: int, h: int, w: int, G: int = 16, amplitude: float = MAX_AMPLITUDE) -> SamplePair:
    """
    왜곡/평면 쌍과 정답 backward map 생성

    접힘(Jacobian 부호 반전)이나 자기 일관성 PSNR 미달이면 다음 하위 시드로
    진폭을 0.8배씩 줄이며 재시도합니다.

    Args:
        seed: 쌍 시드
        h, w: 16의 배수
        G: 제어 격자 크기
        amplitude: 정규화 좌표 기준 최대 진폭 (0이면 항등 변환)

    Returns:
        SamplePair(input=왜곡, gt=평면, task="dewarp", bm_gt=...)
    """
    if h % 16 or w % 16:
        raise ShapeError(f"gen_warp_pair: h, w는 16의 배수여야 합니다 ({h}x{w})")
    flat = gen_clean_doc(derive_seed(seed, 0), h, w)
    for attempt in range(MAX_WARP_RETRIES):
        rng = make_rng(seed, 1, attempt)
        field = sample_field(rng, amplitude * (0.8 ** attempt))
        if not field_is_invertible(field):
            logger.debug(f"seed={seed} attempt={attempt}: 변위장이 접힘, 재시도")
            continue
        distorted = warp_image(flat, field)
        bm_gt = backward_map_from_field(field, G)
        score = psnr(dewarp(distorted, bm_gt), flat)
        if score > MIN_PSNR_DB:
            return SamplePair(input=distorted, gt=flat, task="dewarp", seed=int(seed), bm_gt=bm_gt)
        logger.debug(f"seed={seed} attempt={attempt}: 자기 일관성 PSNR {score:.2f} dB, 재시도")
    raise SynthesisError(f"gen_warp_pair: seed={seed}에서 유효한 변위장을 만들지 못했습니다")


def warp_batch(seeds: List[int], size: int, G: int = 16) -> List[SamplePair]:
    return [gen_warp_pair(s, size, size, G) for s in seeds]
