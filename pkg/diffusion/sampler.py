"""
Sampler - predict-x0 결정적 역확산 샘플러
"""
import logging
from typing import Any, Callable, Optional

import numpy as np

from core.utils import make_rng
from diffusion.schedule import (
    DiffusionSchedule,
    from_diffusion_range,
    reverse_step,
    timestep_ladder,
    to_diffusion_range,
)

logger = logging.getLogger(__name__)

# denoiser(x_t, x_d, task, prior, t) -> x̂0, 모든 이미지는 [−1, 1] 규약의 (B, 3, H, W)
Denoiser = Callable[[np.ndarray, np.ndarray, Any, Optional[np.ndarray], int], np.ndarray]


def sample(
    x_d: np.ndarray,
    task: Any,
    prior: Optional[np.ndarray],
    steps: int,
    denoiser: Denoiser,
    sched: DiffusionSchedule,
    seed: int,
) -> np.ndarray:
    """
    열화 이미지 조건부 샘플링

    x_T ~ N(0, I)에서 시작해 단계마다 x̂0 예측 → [−1, 1] clamp → reverse step.
    마지막 x̂0을 [0, 1]로 변환해 반환합니다. 초기 x_T 이후 난수는 쓰지 않습니다.

    Args:
        x_d: (3, H, W) 또는 (B, 3, H, W), [0, 1]
        task: denoiser에 그대로 전달되는 태스크 조건
        prior: Prior Pool 맵 (denoiser에 그대로 전달)
        steps: 추론 단계 수 (1 ≤ steps ≤ T_max)
        denoiser: x̂0 예측 함수
        sched: 노이즈 스케줄
        seed: x_T 초기화 시드

    Returns:
        x_d와 같은 shape의 [0, 1] 복원 이미지
    """
    ladder = timestep_ladder(sched.T_max, steps)
    single = np.ndim(x_d) == 3
    cond = to_diffusion_range(np.asarray(x_d, dtype=np.float32))
    if single:
        cond = cond[None]

    rng = make_rng(seed)
    x_t = rng.standard_normal(cond.shape).astype(cond.dtype)
    x0_hat = x_t
    for t, t_prev in zip(ladder[:-1], ladder[1:]):
        x0_hat = np.clip(np.asarray(denoiser(x_t, cond, task, prior, t), dtype=cond.dtype), -1.0, 1.0)
        x_t = reverse_step(x_t, x0_hat, t, t_prev, sched)
        logger.debug(f"sample t={t} → {t_prev}")

    out = from_diffusion_range(x0_hat).astype(np.float32)
    return out[0] if single else out
