"""
Blocks - 잔차 합성곱 블록
"""
from typing import Optional

import numpy as np

from autograd import functional as F
from autograd.nn import Conv2d, Linear, Module
from autograd.params import ParamStore
from autograd.tensor import Tensor


class ResBlock(Module):
    """
    conv3×3 → (+ 시간 shift) → SiLU → conv3×3, 입력 skip 합

    채널 수가 바뀌면 skip 경로에 1×1 conv를 둡니다. 정규화 레이어는 없습니다.
    """

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        time_dim: Optional[int] = None,
    ):
        super().__init__(store, prefix)
        self.conv1 = Conv2d(store, self._name("conv1"), in_channels, out_channels, 3, rng)
        self.conv2 = Conv2d(store, self._name("conv2"), out_channels, out_channels, 3, rng)
        self.time = Linear(store, self._name("time"), time_dim, out_channels, rng) if time_dim else None
        self.skip = (
            Conv2d(store, self._name("skip"), in_channels, out_channels, 1, rng)
            if in_channels != out_channels else None
        )
        self.out_channels = out_channels

    def __call__(self, x: Tensor, temb: Optional[Tensor] = None) -> Tensor:
        h = self.conv1(x)
        if self.time is not None and temb is not None:
            shift = self.time(temb)  # (B, C)
            h = h + shift.reshape(shift.shape[0], self.out_channels, 1, 1)
        h = self.conv2(F.silu(h))
        residual = self.skip(x) if self.skip is not None else x
        return h + residual
