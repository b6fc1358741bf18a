"""
Losses - 학습 손실 (L1, 주파수 대역 손실, 태스크 손실, CPB 손실)

모든 손실은 autograd Tensor 위에서 계산되어 역전파에 참여합니다.
"""
from dataclasses import dataclass
from typing import Optional, Union

from autograd import functional as F
from autograd.tensor import Tensor
from core.errors import ConfigError, ShapeError
from models.tasks import TaskRegistry, TaskVector
from priors.smoothing import gaussian_kernel1d


@dataclass(frozen=True)
class FrequencyBand:
    """φ_L = Gaussian blur, φ_H = x − φ_L(x)"""

    kind: str = "low"
    sigma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("low", "high"):
            raise ConfigError(f"FrequencyBand.kind는 low 또는 high: {self.kind}")
        if self.sigma <= 0:
            raise ConfigError(f"FrequencyBand.sigma는 0보다 커야 합니다: {self.sigma}")

    def apply(self, x: Tensor) -> Tensor:
        low = lowpass(x, self.sigma)
        return low if self.kind == "low" else x - low


@dataclass(frozen=True)
class LossWeights:
    """L_low = L1 + β1·L_lowfreq, L_high = L1 + β2·L_highfreq"""

    beta1: float = 1.0
    beta2: float = 0.1

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise ConfigError(f"손실 가중치는 음수일 수 없습니다 (beta1={self.beta1}, beta2={self.beta2})")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_same(pred: Tensor, gt: Tensor, name: str) -> None:
    if pred.shape != gt.shape:
        raise ShapeError(f"{name}: pred {pred.shape}와 gt {gt.shape}의 shape이 다릅니다")


def lowpass(x: Tensor, sigma: float = 2.0) -> Tensor:
    """
    채널별 분리 가능 Gaussian blur (반지름 ceil(3σ), reflect 패딩)

    Args:
        x: (B, C, H, W) Tensor
    """
    if x.ndim != 4:
        raise ShapeError(f"lowpass: (B, C, H, W) 텐서가 필요합니다 (shape={x.shape})")
    b, c, h, w = x.shape
    kernel = gaussian_kernel1d(sigma).astype(x.dtype)
    r = kernel.size // 2
    planes = x.reshape(b * c, 1, h, w)
    padded = F.pad2d(planes, r, r, "reflect")
    vertical = Tensor._wrap(kernel.reshape(1, 1, -1, 1), False)
    horizontal = Tensor._wrap(kernel.reshape(1, 1, 1, -1), False)
    out = F.conv2d(F.conv2d(padded, vertical), horizontal)
    return out.reshape(b, c, h, w)


def l1_loss(pred, gt) -> Tensor:
    """평균 절대 오차"""
    pred, gt = _as_tensor(pred), _as_tensor(gt)
    _check_same(pred, gt, "l1_loss")
    return (pred - gt).abs().mean()


def freq_loss(pred, gt, band: FrequencyBand) -> Tensor:
    """대역 필터를 거친 pred/gt 사이의 L1"""
    pred, gt = _as_tensor(pred), _as_tensor(gt)
    _check_same(pred, gt, "freq_loss")
    return (band.apply(pred) - band.apply(gt)).abs().mean()


def task_loss(
    pred,
    gt,
    task: Union[TaskVector, str],
    w: LossWeights = LossWeights(),
    registry: Optional[TaskRegistry] = None,
    use_freq: bool = True,
    sigma: float = 2.0,
) -> Tensor:
    """
    태스크 대역에 따른 결합 손실

    low 대역 태스크: L1 + β1·L_lowfreq, high 대역 태스크: L1 + β2·L_highfreq.
    use_freq=False이면 L1만 사용합니다.

    Raises:
        TaskError: 등록되지 않은 태스크 이름
    """
    if isinstance(task, str):
        task = (registry or TaskRegistry()).get(task)
    base = l1_loss(pred, gt)
    if not use_freq:
        return base
    beta = w.beta1 if task.band == "low" else w.beta2
    return base + beta * freq_loss(pred, gt, FrequencyBand(kind=task.band, sigma=sigma))


def cpb_loss(bm, bm_gt) -> Tensor:
    """backward map L1 (G×G 격자)"""
    bm = _as_tensor(getattr(bm, "grid", bm))
    bm_gt = _as_tensor(getattr(bm_gt, "grid", bm_gt))
    if bm.shape[-2:] != bm_gt.shape[-2:]:
        raise ShapeError(f"cpb_loss: 격자 크기 불일치 {bm.shape[-2:]} vs {bm_gt.shape[-2:]}")
    _check_same(bm, bm_gt, "cpb_loss")
    return (bm - bm_gt).abs().mean()
