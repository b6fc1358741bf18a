"""
Diffusion Schedule - 노이즈 스케줄, forward noising, 결정적 reverse step

픽셀 규약: 이 모듈 내부는 [−1, 1], 외부 이미지는 [0, 1]
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from core.errors import ConfigError, ShapeError


@dataclass(frozen=True)
class DiffusionSchedule:
    """α_t, ᾱ_t (길이 T_max + 1, α_0 = ᾱ_0 = 1)"""

    T_max: int
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def check_t(self, t: int, name: str = "t") -> None:
        if not (0 <= t <= self.T_max):
            raise ShapeError(f"{name}={t}가 스케줄 범위 [0, {self.T_max}]를 벗어났습니다")


def make_schedule(T_max: int = 100, beta_start: float = 1e-4, beta_end: float = 0.02) -> DiffusionSchedule:
    """
    선형 β 스케줄 생성

    Args:
        T_max: 최대 timestep (1 이상)
        beta_start, beta_end: 0 < beta_start ≤ beta_end < 1

    Returns:
        DiffusionSchedule (float64)
    """
    if T_max < 1:
        raise ConfigError(f"T_max는 1 이상이어야 합니다: {T_max}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ConfigError(f"β 범위가 잘못되었습니다: beta_start={beta_start}, beta_end={beta_end}")
    betas = np.linspace(beta_start, beta_end, T_max) if T_max > 1 else np.array([beta_start])
    alpha = np.concatenate([[1.0], 1.0 - betas])
    alpha_bar = np.cumprod(alpha)
    return DiffusionSchedule(T_max=T_max, alpha=alpha, alpha_bar=alpha_bar)


def forward_noise(x0: np.ndarray, t: int, eps: np.ndarray, sched: DiffusionSchedule) -> np.ndarray:
    """x_t = √ᾱ_t·x_0 + √(1−ᾱ_t)·ε"""
    sched.check_t(t)
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ShapeError(f"forward_noise: x0 {x0.shape}와 eps {eps.shape}의 shape이 다릅니다")
    a_bar = sched.alpha_bar[t]
    if t == 0:
        return x0.copy()
    out = np.sqrt(a_bar) * x0 + np.sqrt(1.0 - a_bar) * eps
    return out.astype(x0.dtype)


def forward_noise_batch(x0: np.ndarray, ts: np.ndarray, eps: np.ndarray, sched: DiffusionSchedule) -> np.ndarray:
    """배치 원소마다 다른 t로 forward noising (B, C, H, W)"""
    return np.stack([forward_noise(x0[i], int(ts[i]), eps[i], sched) for i in range(x0.shape[0])])


def reverse_step(x_t: np.ndarray, x0_hat: np.ndarray, t: int, t_prev: int, sched: DiffusionSchedule) -> np.ndarray:
    """
    결정적 reverse step (stride 허용)

    x_{t_prev} = √ᾱ_{t_prev}·x̂0 + √(1−ᾱ_{t_prev})·(x_t − √ᾱ_t·x̂0)/√(1−ᾱ_t)
    """
    sched.check_t(t)
    sched.check_t(t_prev, "t_prev")
    if not t_prev < t:
        raise ShapeError(f"reverse_step: t_prev({t_prev}) < t({t}) 조건 위반")
    a_bar = sched.alpha_bar[t]
    a_prev = sched.alpha_bar[t_prev]
    if a_bar >= 1.0:
        raise ZeroDivisionError(f"reverse_step: ᾱ_{t} = 1 이므로 노이즈 성분을 복원할 수 없습니다")
    x0_hat = np.asarray(x0_hat)
    if t_prev == 0 and a_prev == 1.0:
        return x0_hat.copy()
    eps_hat = (np.asarray(x_t) - np.sqrt(a_bar) * x0_hat) / np.sqrt(1.0 - a_bar)
    out = np.sqrt(a_prev) * x0_hat + np.sqrt(1.0 - a_prev) * eps_hat
    return out.astype(x0_hat.dtype)


def timestep_ladder(T_max: int, steps: int) -> List[int]:
    """
    T_max에서 0까지 균등 간격 추론 timestep 목록

    Returns:
        [T_max, ..., 0] (steps + 1개, 중복 없음)
    """
    if steps < 1:
        raise ConfigError(f"steps는 1 이상이어야 합니다: {steps}")
    if steps > T_max:
        raise ConfigError(f"steps({steps})가 T_max({T_max})보다 큽니다")
    ladder = np.rint(np.linspace(T_max, 0, steps + 1)).astype(int)
    return [int(t) for t in ladder]


def to_diffusion_range(image: np.ndarray) -> np.ndarray:
    """[0, 1] → [−1, 1]"""
    return image * 2.0 - 1.0


def from_diffusion_range(image: np.ndarray) -> np.ndarray:
    """[−1, 1] → [0, 1] (clamp)"""
    return np.clip((image + 1.0) * 0.5, 0.0, 1.0)
