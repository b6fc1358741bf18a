"""
Optimizer - AdamW (decoupled weight decay)

p ← p − lr·m̂/(√v̂ + ε) − lr·λ·p
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from autograd.params import ParamStore
from core.errors import ShapeError


@dataclass
class OptimizerState:
    """AdamW 하이퍼파라미터와 모멘트 버퍼"""

    lr: float = 1e-4
    weight_decay: float = 5e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(params: ParamStore, state: OptimizerState) -> None:
    """
    학습 가능한 파라미터 한 스텝 갱신 (동결 파라미터는 그대로)

    gradient 초기화는 호출자 책임입니다 (params.zero_grad()).

    Raises:
        ShapeError: 학습 가능한 파라미터에 grad가 없을 때
    """
    trainable = list(params.trainable_items())
    for name, value in trainable:
        if value.grad is None:
            raise ShapeError(f"adamw_step: 학습 가능한 파라미터 {name}에 gradient가 없습니다")

    state.step += 1
    beta1, beta2 = state.betas
    bias1 = 1.0 - beta1 ** state.step
    bias2 = 1.0 - beta2 ** state.step

    for name, value in trainable:
        grad = value.grad.data.astype(value.dtype, copy=False)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(value.data)
            v = np.zeros_like(value.data)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v

        m_hat = m / bias1
        v_hat = v / bias2
        update = state.lr * m_hat / (np.sqrt(v_hat) + state.eps) + state.lr * state.weight_decay * value.data
        value.data = (value.data - update).astype(value.dtype)
