"""
Gradcheck - 중앙 차분 기반 gradient 검증

오차 척도: |analytic − numeric| / max(|analytic|, |numeric|, 1e-3)
"""
from typing import Callable, Optional, Sequence

import numpy as np

from autograd.tensor import Tensor, no_grad
from core.errors import GradcheckError


def gradcheck(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    eps: float = 1e-4,
    samples_per_tensor: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    fn()의 스칼라 출력에 대해 tensors의 gradient를 수치 미분과 비교

    Args:
        fn: 인자 없이 스칼라 Tensor를 반환하는 함수 (tensors를 클로저로 사용)
        tensors: 검사할 requires_grad leaf 텐서 (float64 권장)
        eps: 중앙 차분 간격
        samples_per_tensor: 텐서당 샘플링할 원소 수 (None이면 전체)
        rng: 샘플링용 생성기

    Returns:
        최대 상대 오차
    """
    rng = rng or np.random.default_rng(0)
    for t in tensors:
        t.grad = None
    loss = fn()
    loss.backward()
    analytic = [
        t.grad.data.reshape(-1).copy() if t.grad is not None else np.zeros(t.data.size)
        for t in tensors
    ]

    worst = 0.0
    with no_grad():
        for t, grad in zip(tensors, analytic):
            flat = t.data.reshape(-1)
            if samples_per_tensor is None or flat.size <= samples_per_tensor:
                indices = np.arange(flat.size)
            else:
                indices = np.sort(rng.choice(flat.size, size=samples_per_tensor, replace=False))
            for i in indices:
                original = flat[i]
                flat[i] = original + eps
                plus = fn().item()
                flat[i] = original - eps
                minus = fn().item()
                flat[i] = original
                numeric = (plus - minus) / (2.0 * eps)
                scale = max(abs(grad[i]), abs(numeric), 1e-3)
                worst = max(worst, abs(grad[i] - numeric) / scale)
    return worst


def assert_gradcheck(name: str, fn: Callable[[], Tensor], tensors: Sequence[Tensor],
                     tol: float = 1e-4, **kwargs) -> float:
    """gradcheck 실패 시 GradcheckError"""
    error = gradcheck(fn, tensors, **kwargs)
    if not np.isfinite(error) or error >= tol:
        raise GradcheckError(f"{name}: 최대 상대 오차 {error:.3e} >= {tol:.1e}")
    return error
