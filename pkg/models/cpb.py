"""
CPB - Coordinate Prediction Branch

공유 인코더 특징 → AAP(G×G) 융합 → 6개 dilated 분기 → bm head(tanh)
예측된 backward map을 원본 해상도로 올려 왜곡 이미지를 샘플링합니다.
"""
import os
import struct
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from autograd import functional as F
from autograd.nn import Conv2d, Module
from autograd.params import ParamStore
from autograd.tensor import Tensor, concat, no_grad
from core.errors import ShapeError
from models.denoiser import DenoiserConfig, EncoderFeatures, UniDocDenoiser

# 분기 1–3: 단일 conv, 분기 4–6: 3개 conv 체인
BRANCH_DILATIONS: List[Tuple[int, ...]] = [(1,), (2,), (5,), (8, 3, 2), (12, 7, 4), (18, 12, 6)]

UDBM_MAGIC = b"UDBM"
UDBM_VERSION = 1


@dataclass
class BackwardMap:
    """(2, G, G) 정규화 소스 좌표 (채널 0 = x, 채널 1 = y), 값은 [−1, 1]"""

    grid: np.ndarray

    @property
    def G(self) -> int:
        return self.grid.shape[-1]

    @classmethod
    def identity(cls, G: int) -> "BackwardMap":
        return cls(grid=F.identity_grid(G, G, dtype=np.float32)[0])

    def is_valid(self) -> bool:
        return bool(np.all(np.isfinite(self.grid)) and np.all(np.abs(self.grid) <= 1.0))

    # ==================== UDBM 바이너리 ====================

    def dump(self, path: str) -> None:
        """magic "UDBM" | u16 version | u16 G | 2·G·G float32 LE (채널 우선)"""
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        header = UDBM_MAGIC + struct.pack("<HH", UDBM_VERSION, self.G)
        with open(path, "wb") as f:
            f.write(header + self.grid.astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path: str) -> "BackwardMap":
        with open(path, "rb") as f:
            raw = f.read()
        if raw[:4] != UDBM_MAGIC:
            raise ShapeError(f"UDBM magic이 아닙니다: {path}")
        version, g = struct.unpack("<HH", raw[4:8])
        if version != UDBM_VERSION:
            raise ShapeError(f"지원하지 않는 UDBM 버전: {version}")
        values = np.frombuffer(raw[8:], dtype="<f4")
        if values.size != 2 * g * g:
            raise ShapeError(f"UDBM 데이터 길이 불일치: {values.size} != {2 * g * g}")
        return cls(grid=values.reshape(2, g, g).astype(np.float32))


def cpb_fuse(features: EncoderFeatures, G: int) -> Tensor:
    """
    f_c = Concat(AAP(f^1), ..., AAP(f^4))

    Returns:
        (B, Σc_l, G, G)
    """
    if G < 2:
        raise ShapeError(f"cpb_fuse: G는 2 이상이어야 합니다: {G}")
    return concat([F.adaptive_avg_pool(f, G, G) for f in features.stages], axis=1)


class DilatedContext(Module):
    """6개 병렬 dilated 분기, 출력은 채널 방향 concat"""

    def __init__(self, store: ParamStore, prefix: str, in_channels: int, branch_channels: int,
                 rng: np.random.Generator, dilations: Sequence[Tuple[int, ...]] = BRANCH_DILATIONS):
        super().__init__(store, prefix)
        self.branches: List[List[Conv2d]] = []
        for i, rates in enumerate(dilations, start=1):
            convs = []
            cin = in_channels
            for j, rate in enumerate(rates, start=1):
                convs.append(Conv2d(store, self._name(f"branch{i}.conv{j}"), cin, branch_channels, 3, rng,
                                    dilation=rate, padding=rate))
                cin = branch_channels
            self.branches.append(convs)

    def branch_forward(self, index: int, f_c: Tensor) -> Tensor:
        """분기 하나 (index는 1부터)"""
        h = f_c
        for conv in self.branches[index - 1]:
            try:
                h = F.silu(conv(h))
            except ShapeError as exc:
                raise ShapeError(f"dilated_context branch{index}: {exc}") from exc
        if h.shape[2:] != f_c.shape[2:]:
            raise ShapeError(
                f"dilated_context branch{index}: 출력 {h.shape[2:]}가 G×G {f_c.shape[2:]}를 유지하지 못했습니다"
            )
        return h

    def __call__(self, f_c: Tensor) -> Tensor:
        return concat([self.branch_forward(i, f_c) for i in range(1, len(self.branches) + 1)], axis=1)


class BackwardMapHead(Module):
    """conv3×3 ×3 (채널 → 64 → 32 → 2), tanh"""

    def __init__(self, store: ParamStore, prefix: str, in_channels: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        self.conv1 = Conv2d(store, self._name("conv1"), in_channels, 64, 3, rng)
        self.conv2 = Conv2d(store, self._name("conv2"), 64, 32, 3, rng)
        self.conv3 = Conv2d(store, self._name("conv3"), 32, 2, 3, rng)

    def __call__(self, f_d: Tensor) -> Tensor:
        h = F.silu(self.conv1(f_d))
        h = F.silu(self.conv2(h))
        return self.conv3(h).tanh()


class CoordinateBranch:
    """
    CPB 전체: 인코더(공유) 특징 → cpb_fuse → dilated_context → bm_head

    파라미터 그룹: cpb
    """

    def __init__(self, store: ParamStore, config: DenoiserConfig, denoiser: UniDocDenoiser,
                 rng: np.random.Generator):
        self.config = config
        self.denoiser = denoiser
        self.G = config.cpb_grid
        fused = sum(config.stage_channels)
        self.context = DilatedContext(store, "cpb.context", fused, config.cpb_branch_channels, rng)
        self.head = BackwardMapHead(store, "cpb.head", config.cpb_branch_channels * len(BRANCH_DILATIONS), rng)

    def encoder_input(self, x_d: Tensor) -> Tensor:
        """(B, 3, H, W) [−1, 1] → x6, 노이즈 채널은 0 (또는 x_d 복제)"""
        if self.config.cpb_noise_fill == "duplicate":
            return concat([x_d, x_d], axis=1)
        zeros = Tensor._wrap(np.zeros(x_d.shape, dtype=x_d.dtype), False)
        return concat([zeros, x_d], axis=1)

    def forward(self, x_d) -> Tensor:
        """
        Args:
            x_d: (B, 3, H, W) [−1, 1] (H, W는 16의 배수)

        Returns:
            (B, 2, G, G) backward map Tensor
        """
        x_d = x_d if isinstance(x_d, Tensor) else Tensor(x_d)
        temb = self.denoiser.time_features(0, x_d.shape[0])
        features = self.denoiser.encoder_forward(self.encoder_input(x_d), temb)
        return self.head(self.context(cpb_fuse(features, self.G)))

    __call__ = forward

    def predict(self, image: np.ndarray) -> BackwardMap:
        """(3, H, W) [0, 1] 이미지 → BackwardMap"""
        with no_grad():
            bm = self.forward(Tensor(image[None] * 2.0 - 1.0))
        return BackwardMap(grid=bm.data[0].astype(np.float32))


def dewarp(x_d: np.ndarray, bm: BackwardMap) -> np.ndarray:
    """
    bm을 (2, H, W)로 bilinear 업샘플한 뒤 x_d를 샘플링

    Args:
        x_d: (3, H, W) [0, 1]
        bm: BackwardMap

    Returns:
        (3, H, W) 평탄화된 이미지
    """
    x_d = np.asarray(x_d)
    _, h, w = x_d.shape
    with no_grad():
        grid = F.bilinear_resize(Tensor(bm.grid[None], dtype=np.float64), h, w)
        out = F.bilinear_grid_sample(Tensor(x_d[None], dtype=np.float64), grid)
    return out.data[0].astype(np.float32)
