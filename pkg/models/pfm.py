"""
PFM - Prior Fusion Module

디코더 stage마다 Prior Pool을 태스크 가중치와 내용 가중치로 조절해
stage 특징과 융합합니다.

    w_task = MLP(task), w_content = MLP(GAP(f))
    f_recon = ResBlock(Concat(f, w_task ⊙ P^l + w_content ⊙ P^l))
"""
import numpy as np

from autograd import functional as F
from autograd.nn import MLP, Conv2d, Module
from autograd.params import ParamStore
from autograd.tensor import Tensor, concat
from core.errors import ShapeError
from models.blocks import ResBlock


class PriorRefiner(Module):
    """P(10, H, W) → P^l(c_l, H/2^l, W/2^l): conv3×3 + stride-2 conv l회 + 1×1 conv"""

    def __init__(self, store: ParamStore, prefix: str, prior_channels: int, channels: int,
                 stage: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        self.prior_channels = prior_channels
        self.inp = Conv2d(store, self._name("inp"), prior_channels, channels, 3, rng)
        self.down = [
            Conv2d(store, self._name(f"down{i}"), channels, channels, 3, rng, stride=2, padding=1)
            for i in range(stage)
        ]
        self.proj = Conv2d(store, self._name("proj"), channels, channels, 1, rng)

    def __call__(self, prior: Tensor, out_h: int, out_w: int) -> Tensor:
        if prior.ndim != 4 or prior.shape[1] != self.prior_channels:
            raise ShapeError(
                f"PFM: prior 채널 차원(dim 1)은 {self.prior_channels}이어야 합니다 (입력 shape={prior.shape})"
            )
        h = F.silu(self.inp(prior))
        for conv in self.down:
            h = F.silu(conv(h))
        h = self.proj(h)
        if h.shape[2:] != (out_h, out_w):
            h = F.bilinear_resize(h, out_h, out_w)
        return h


class PriorFusion(Module):
    """stage l 하나의 PFM 인스턴스 (stage별 독립 파라미터)"""

    def __init__(self, store: ParamStore, prefix: str, channels: int, stage: int, task_slots: int,
                 prior_channels: int, hidden: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        self.stage = stage
        self.channels = channels
        self.refiner = PriorRefiner(store, self._name("refine"), prior_channels, channels, stage, rng)
        self.task_mlp = MLP(store, self._name("task_mlp"), [task_slots, hidden, channels], rng)
        self.content_mlp = MLP(store, self._name("content_mlp"), [channels, hidden, channels], rng)
        self.fuse = ResBlock(store, self._name("fuse"), 2 * channels, channels, rng)

    def __call__(self, f: Tensor, task: Tensor, prior: Tensor) -> Tensor:
        b, c, h, w = f.shape
        if c != self.channels:
            raise ShapeError(f"PFM stage{self.stage}: 특징 채널 {c} != {self.channels}")
        refined = self.refiner(prior, h, w)
        w_task = self.task_mlp(task).reshape(b, c, 1, 1)
        w_content = self.content_mlp(F.global_avg_pool(f)).reshape(b, c, 1, 1)
        fused_prior = w_task * refined + w_content * refined
        return self.fuse(concat([f, fused_prior], axis=1))


class TaskConvFusion(Module):
    """
    PFM 제거 ablation: 태스크별 conv 블록 출력과 f를 ResBlock으로 융합

    Prior Pool은 사용하지 않습니다. 모든 슬롯의 블록을 계산한 뒤 one-hot으로 게이트합니다.
    """

    def __init__(self, store: ParamStore, prefix: str, channels: int, stage: int, task_slots: int,
                 rng: np.random.Generator):
        super().__init__(store, prefix)
        self.stage = stage
        self.channels = channels
        self.blocks = [
            (Conv2d(store, self._name(f"task{k}.conv1"), channels, channels, 3, rng),
             Conv2d(store, self._name(f"task{k}.conv2"), channels, channels, 3, rng))
            for k in range(task_slots)
        ]
        self.fuse = ResBlock(store, self._name("fuse"), 2 * channels, channels, rng)

    def __call__(self, f: Tensor, task: Tensor, prior: Tensor = None) -> Tensor:
        b, c, _, _ = f.shape
        routed = None
        for k, (conv1, conv2) in enumerate(self.blocks):
            gate = task[:, k].reshape(b, 1, 1, 1)
            out = conv2(F.silu(conv1(f))) * gate
            routed = out if routed is None else routed + out
        return self.fuse(concat([f, routed], axis=1))
