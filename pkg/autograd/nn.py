"""
NN Layers - ParamStore에 파라미터를 등록하는 기본 레이어

초기화: 가중치는 U(−√(1/fan_in), √(1/fan_in)), bias는 0
"""
import math
from typing import List, Optional, Sequence

import numpy as np

from autograd import functional as F
from autograd.params import ParamStore
from autograd.tensor import Tensor


class Module:
    """prefix 경로 아래에 파라미터를 등록하는 레이어 기본 클래스"""

    def __init__(self, store: ParamStore, prefix: str):
        self.store = store
        self.prefix = prefix

    def _name(self, name: str) -> str:
        return f"{self.prefix}.{name}" if self.prefix else name

    def weight_param(self, name: str, shape: Sequence[int], fan_in: int, rng: np.random.Generator) -> Tensor:
        bound = math.sqrt(1.0 / fan_in)
        return self.store.add(self._name(name), Tensor(rng.uniform(-bound, bound, size=tuple(shape))))

    def zero_param(self, name: str, shape: Sequence[int]) -> Tensor:
        return self.store.add(self._name(name), Tensor(np.zeros(tuple(shape))))


class Conv2d(Module):
    """3×3 등 홀수 커널 합성곱 (기본 padding은 해상도 유지)"""

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        dilation: int = 1,
        padding: Optional[int] = None,
    ):
        super().__init__(store, prefix)
        self.stride = stride
        self.dilation = dilation
        self.padding = dilation * (kernel_size - 1) // 2 if padding is None else padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = self.weight_param("weight", (out_channels, in_channels, kernel_size, kernel_size), fan_in, rng)
        self.bias = self.zero_param("bias", (out_channels,))

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride,
                        padding=self.padding, dilation=self.dilation)


class Linear(Module):
    def __init__(self, store: ParamStore, prefix: str, in_features: int, out_features: int,
                 rng: np.random.Generator):
        super().__init__(store, prefix)
        self.weight = self.weight_param("weight", (out_features, in_features), in_features, rng)
        self.bias = self.zero_param("bias", (out_features,))

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class MLP(Module):
    """Linear-SiLU-...-Linear (마지막 레이어 뒤 활성화 없음)"""

    def __init__(self, store: ParamStore, prefix: str, dims: Sequence[int], rng: np.random.Generator):
        super().__init__(store, prefix)
        self.layers: List[Linear] = [
            Linear(store, self._name(f"fc{i}"), dims[i], dims[i + 1], rng)
            for i in range(len(dims) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.silu(x)
        return x

    @property
    def last(self) -> Linear:
        return self.layers[-1]


class SelfAttention(Module):
    """단일 헤드 공간 self-attention (q/k/v/out 투영 + residual)"""

    def __init__(self, store: ParamStore, prefix: str, channels: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        self.q = Linear(store, self._name("q"), channels, channels, rng)
        self.k = Linear(store, self._name("k"), channels, channels, rng)
        self.v = Linear(store, self._name("v"), channels, channels, rng)
        self.out = Linear(store, self._name("out"), channels, channels, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return F.self_attention(
            x,
            self.q.weight, self.q.bias,
            self.k.weight, self.k.bias,
            self.v.weight, self.v.bias,
            self.out.weight, self.out.bias,
        )
