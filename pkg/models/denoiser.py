"""
Denoiser - 조건부 U-Net x̂0 예측기

인코더(공유) → 어텐션 mid block → PFM 디코더
입력 x6 = Concat(x_t, x_d), 이미지 값은 [−1, 1] 규약
"""
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, field_validator

from autograd import functional as F
from autograd.nn import MLP, Conv2d, Module, SelfAttention
from autograd.params import ParamStore
from autograd.tensor import Tensor, concat, no_grad
from core.errors import ShapeError
from models.blocks import ResBlock
from models.pfm import PriorFusion, TaskConvFusion
from models.tasks import TaskVector

VARIANTS = ("none", "no-prior-pool", "no-pfm", "no-freq-loss")

# no-prior-pool 변형에서 Prior Pool을 대신하는 학습 상수의 크기
CONSTANT_PRIOR_SIZE = 8


class DenoiserConfig(BaseModel):
    """네트워크 구조 설정"""
    stage_channels: List[int] = [16, 32, 64, 96]
    task_slots: int = 8
    prior_channels: int = 10
    time_dim: int = 64
    image_channels: int = 6
    out_channels: int = 3
    pfm_hidden: int = 32
    cpb_grid: int = 16
    cpb_branch_channels: int = 32
    cpb_noise_fill: str = "zeros"
    variant: str = "none"

    @field_validator("stage_channels")
    @classmethod
    def _four_ascending(cls, value: List[int]) -> List[int]:
        if len(value) != 4:
            raise ValueError(f"stage_channels는 정확히 4개여야 합니다: {value}")
        if any(c < 1 for c in value) or any(a > b for a, b in zip(value, value[1:])):
            raise ValueError(f"stage_channels는 양수 오름차순이어야 합니다: {value}")
        return value

    @field_validator("time_dim")
    @classmethod
    def _even_time_dim(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"time_dim은 2 이상의 짝수여야 합니다: {value}")
        return value

    @field_validator("cpb_noise_fill")
    @classmethod
    def _noise_fill(cls, value: str) -> str:
        if value not in ("zeros", "duplicate"):
            raise ValueError(f"cpb_noise_fill은 zeros 또는 duplicate: {value}")
        return value

    @field_validator("variant")
    @classmethod
    def _variant(cls, value: str) -> str:
        if value not in VARIANTS:
            raise ValueError(f"알 수 없는 ablation 변형: {value} (가능: {', '.join(VARIANTS)})")
        return value


@dataclass
class EncoderFeatures:
    """stage별 인코더 출력 f^1..f^4 (해상도 H/2^l)"""

    stages: List[Tensor]

    @property
    def bottleneck(self) -> Tensor:
        return self.stages[-1]

    def __getitem__(self, level: int) -> Tensor:
        """level은 1부터 시작"""
        return self.stages[level - 1]


def as_task_tensor(task: Union[TaskVector, np.ndarray, Tensor], batch: int) -> Tensor:
    """TaskVector / (slots,) / (B, slots) → (B, slots) Tensor"""
    if isinstance(task, Tensor):
        data = task.data
    elif isinstance(task, TaskVector):
        data = task.one_hot
    else:
        data = np.asarray(task)
    if data.ndim == 1:
        data = np.broadcast_to(data, (batch, data.shape[0]))
    return Tensor(data)


def as_prior_tensor(prior, batch: int) -> Tensor:
    """PriorPool.maps (10, H, W) 또는 (B, 10, H, W) → Tensor"""
    if isinstance(prior, Tensor):
        return prior
    data = np.asarray(getattr(prior, "maps", prior))
    if data.ndim == 3:
        data = np.broadcast_to(data, (batch,) + data.shape)
    return Tensor(data)


class Encoder(Module):
    """stem conv + stage별 ResBlock 2개 + stride-2 다운샘플"""

    def __init__(self, store: ParamStore, config: DenoiserConfig, rng: np.random.Generator):
        super().__init__(store, "encoder")
        chans = config.stage_channels
        self.time_mlp = MLP(store, self._name("time_mlp"), [config.time_dim, config.time_dim, config.time_dim], rng)
        self.stem = Conv2d(store, self._name("stem"), config.image_channels, chans[0], 3, rng)
        self.stages = []
        cin = chans[0]
        for level, cout in enumerate(chans, start=1):
            prefix = f"stage{level}"
            res1 = ResBlock(store, self._name(f"{prefix}.res1"), cin, cout, rng, config.time_dim)
            res2 = ResBlock(store, self._name(f"{prefix}.res2"), cout, cout, rng, config.time_dim)
            down = Conv2d(store, self._name(f"{prefix}.down"), cout, cout, 3, rng, stride=2, padding=1)
            self.stages.append((res1, res2, down))
            cin = cout

    def __call__(self, x6: Tensor, temb: Tensor) -> EncoderFeatures:
        h = self.stem(x6)
        outputs = []
        for res1, res2, down in self.stages:
            h = res2(res1(h, temb), temb)
            h = down(h)
            outputs.append(h)
        return EncoderFeatures(stages=outputs)


class MidBlock(Module):
    """ResBlock → self-attention → ResBlock"""

    def __init__(self, store: ParamStore, config: DenoiserConfig, rng: np.random.Generator):
        super().__init__(store, "mid")
        c = config.stage_channels[-1]
        self.res1 = ResBlock(store, self._name("res1"), c, c, rng, config.time_dim)
        self.attn = SelfAttention(store, self._name("attn"), c, rng)
        self.res2 = ResBlock(store, self._name("res2"), c, c, rng, config.time_dim)

    def __call__(self, bottleneck: Tensor, temb: Optional[Tensor] = None) -> Tensor:
        return self.res2(self.attn(self.res1(bottleneck, temb)), temb)


class Decoder(Module):
    """
    stage l = 4..1: Concat(h, f^l) → ResBlock → PFM → 업샘플 ×2, 마지막 3×3 conv head

    h는 mid 출력(H/16)에서 시작해 stage마다 f^l과 같은 해상도로 맞춰집니다.
    """

    def __init__(self, store: ParamStore, config: DenoiserConfig, rng: np.random.Generator):
        super().__init__(store, "decoder")
        chans = config.stage_channels
        self.levels = []
        prev = chans[-1]
        for level in range(4, 0, -1):
            c = chans[level - 1]
            res = ResBlock(store, self._name(f"stage{level}.res"), prev + c, c, rng, config.time_dim)
            if config.variant == "no-pfm":
                fusion = TaskConvFusion(store, f"pfm.stage{level}", c, level, config.task_slots, rng)
            else:
                fusion = PriorFusion(store, f"pfm.stage{level}", c, level, config.task_slots,
                                     config.prior_channels, config.pfm_hidden, rng)
            self.levels.append((level, res, fusion))
            prev = c
        self.head = Conv2d(store, self._name("head"), chans[0], config.out_channels, 3, rng)

    def __call__(self, features: EncoderFeatures, mid: Tensor, task: Tensor, prior: Tensor,
                 temb: Optional[Tensor] = None) -> Tensor:
        h = mid
        for level, res, fusion in self.levels:
            skip = features[level]
            if h.shape[2:] != skip.shape[2:]:
                raise ShapeError(f"decoder stage{level}: 해상도 불일치 {h.shape[2:]} vs skip {skip.shape[2:]}")
            h = res(concat([h, skip], axis=1), temb)
            h = fusion(h, task, prior)
            h = F.upsample_nearest(h, 2)
        return self.head(h)


class UniDocDenoiser:
    """
    x̂0 = F(x_t; x_d, task, P)

    파라미터 그룹: encoder, mid, decoder, pfm
    """

    def __init__(self, store: ParamStore, config: DenoiserConfig, rng: np.random.Generator):
        self.store = store
        self.config = config
        self.encoder = Encoder(store, config, rng)
        self.mid = MidBlock(store, config, rng)
        self.decoder = Decoder(store, config, rng)
        self.constant_prior = None
        if config.variant == "no-prior-pool":
            shape = (config.prior_channels, CONSTANT_PRIOR_SIZE, CONSTANT_PRIOR_SIZE)
            self.constant_prior = store.add("pfm.constant_prior", Tensor(rng.uniform(0.0, 1.0, size=shape)))

    # ==================== 단계별 forward ====================

    def time_features(self, t, batch: int) -> Tensor:
        """정수 t 또는 (B,) timestep → time MLP 출력 (B, time_dim)"""
        steps = np.full(batch, int(t)) if np.ndim(t) == 0 else np.asarray(t)
        return self.encoder.time_mlp(F.time_embedding_batch(steps, self.config.time_dim))

    def encoder_forward(self, x6: Tensor, temb: Tensor) -> EncoderFeatures:
        if x6.ndim != 4 or x6.shape[1] != self.config.image_channels:
            raise ShapeError(f"encoder: (B, {self.config.image_channels}, H, W) 입력이 필요합니다 (shape={x6.shape})")
        h, w = x6.shape[2:]
        if h % 16 or w % 16:
            raise ShapeError(
                f"encoder: H, W는 16의 배수여야 합니다 (H={h}, W={w}); "
                f"아래/오른쪽에 ({(-h) % 16}, {(-w) % 16}) 픽셀 패딩이 필요합니다"
            )
        return self.encoder(x6, temb)

    def mid_forward(self, bottleneck: Tensor, temb: Optional[Tensor] = None) -> Tensor:
        return self.mid(bottleneck, temb)

    def resolve_prior(self, prior, batch: int, height: int, width: int) -> Tensor:
        """ablation 변형에 따라 실제로 PFM에 들어갈 prior 결정"""
        if self.constant_prior is not None:
            const = self.constant_prior.reshape(1, *self.constant_prior.shape)
            resized = F.bilinear_resize(const, height, width)
            return concat([resized] * batch, axis=0) if batch > 1 else resized
        if prior is None:
            if self.config.variant == "no-pfm":
                return None
            raise ShapeError("denoiser: Prior Pool이 필요합니다")
        return as_prior_tensor(prior, batch)

    def decoder_forward(self, features: EncoderFeatures, mid: Tensor, task, prior,
                        temb: Optional[Tensor] = None) -> Tensor:
        batch = mid.shape[0]
        h = features[1].shape[2] * 2
        w = features[1].shape[3] * 2
        return self.decoder(features, mid, as_task_tensor(task, batch),
                            self.resolve_prior(prior, batch, h, w), temb)

    def forward(self, x_t, x_d, task, prior, t) -> Tensor:
        """
        x̂0 예측

        Args:
            x_t, x_d: (B, 3, H, W) Tensor 또는 배열, [−1, 1]
            task: TaskVector 또는 one-hot 배열
            prior: PriorPool / (B, 10, H, W)
            t: 정수 또는 (B,) timestep

        Returns:
            (B, 3, H, W) Tensor
        """
        x_t = x_t if isinstance(x_t, Tensor) else Tensor(x_t)
        x_d = x_d if isinstance(x_d, Tensor) else Tensor(x_d)
        if x_t.shape != x_d.shape:
            raise ShapeError(f"denoiser: x_t {x_t.shape}와 x_d {x_d.shape}의 shape이 다릅니다")
        batch = x_t.shape[0]
        temb = self.time_features(t, batch)
        features = self.encoder_forward(concat([x_t, x_d], axis=1), temb)
        mid = self.mid_forward(features.bottleneck, temb)
        return self.decoder_forward(features, mid, task, prior, temb)

    __call__ = forward

    def predict(self, x_t: np.ndarray, x_d: np.ndarray, task, prior, t: int) -> np.ndarray:
        """샘플러용 numpy 인터페이스 (그래프 기록 없음)"""
        with no_grad():
            return self.forward(x_t, x_d, task, prior, t).numpy()
