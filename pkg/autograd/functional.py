"""
Functional - 신경망 구성 연산 (합성곱, 풀링, 샘플링, 어텐션 등)

모든 연산은 (B, C, H, W) 배치 텐서를 기준으로 하며 자동 미분에 참여합니다.
"""
import math
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autograd.tensor import Function, Tensor, _as_tensor, get_default_dtype
from core.errors import ShapeError


def _require_rank(x: Tensor, rank: int, name: str) -> None:
    if x.ndim != rank:
        raise ShapeError(f"{name}: rank {rank} 텐서가 필요합니다 (입력 shape={x.shape})")


# ==================== 활성화 함수 ====================

class SiLU(Function):
    @staticmethod
    def forward(ctx, a):
        sig = 0.5 * (np.tanh(0.5 * a) + 1.0)
        ctx.save_for_backward(a, sig)
        return a * sig

    @staticmethod
    def backward(ctx, grad):
        a, sig = ctx.saved
        return (grad * (sig * (1.0 + a * (1.0 - sig))),)


def silu(x: Tensor) -> Tensor:
    """SiLU(x) = x·σ(x), SiLU(0) = 0"""
    return SiLU.apply(x)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """최대값을 빼서 overflow를 막는 softmax"""
    shift = Tensor._wrap(np.max(x.data, axis=axis, keepdims=True), False)
    e = (x - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


# ==================== 패딩 ====================

class Pad(Function):
    """인덱스 맵 기반 패딩 (zero / reflect / edge)"""

    @staticmethod
    def forward(ctx, a, pad_h, pad_w, mode):
        h, w = a.shape[-2:]
        pads = ((pad_h, pad_h), (pad_w, pad_w))
        if mode == "zero":
            ctx.save_for_backward(mode, pad_h, pad_w, None, None)
            width = [(0, 0)] * (a.ndim - 2) + list(pads)
            return np.pad(a, width, mode="constant")
        rows = np.pad(np.arange(h), pads[0], mode=mode)
        cols = np.pad(np.arange(w), pads[1], mode=mode)
        ctx.save_for_backward(mode, pad_h, pad_w, (h, w), (rows, cols))
        return a[..., rows[:, None], cols[None, :]]

    @staticmethod
    def backward(ctx, grad):
        mode, pad_h, pad_w, size, maps = ctx.saved
        if mode == "zero":
            h_end = grad.shape[-2] - pad_h
            w_end = grad.shape[-1] - pad_w
            return (grad[..., pad_h:h_end, pad_w:w_end],)
        rows, cols = maps
        h, w = size
        lead = grad.shape[:-2]
        flat = grad.reshape((-1,) + grad.shape[-2:])
        # 행/열 방향으로 나눠서 누적 (분리 가능한 인덱스 맵)
        out_rows = np.zeros((flat.shape[0], h, flat.shape[2]), dtype=grad.dtype)
        np.add.at(out_rows, (slice(None), rows, slice(None)), flat)
        out = np.zeros((flat.shape[0], h, w), dtype=grad.dtype)
        np.add.at(out, (slice(None), slice(None), cols), out_rows)
        return (out.reshape(lead + (h, w)),)


def pad2d(x: Tensor, pad_h: int, pad_w: int, mode: str = "zero") -> Tensor:
    """
    마지막 두 축 패딩

    Args:
        mode: "zero", "reflect", "edge"
    """
    if mode not in ("zero", "reflect", "edge"):
        raise ValueError(f"지원하지 않는 패딩 모드: {mode}")
    if pad_h == 0 and pad_w == 0:
        return x
    return Pad.apply(x, pad_h, pad_w, mode)


# ==================== 합성곱 ====================

class Conv2d(Function):
    @staticmethod
    def forward(ctx, x, weight, bias, stride, dilation, kh, kw, out_h, out_w):
        span_h = dilation * (kh - 1) + 1
        span_w = dilation * (kw - 1) + 1
        windows = sliding_window_view(x, (span_h, span_w), axis=(2, 3))
        # (B, Cin, H', W', kh, kw)
        cols = windows[:, :, ::stride, ::stride, ::dilation, ::dilation][:, :, :out_h, :out_w]
        out = np.tensordot(cols, weight, axes=([1, 4, 5], [1, 2, 3]))  # (B, H', W', Cout)
        out = out.transpose(0, 3, 1, 2)
        if bias is not None:
            out = out + bias.reshape(1, -1, 1, 1)
        ctx.save_for_backward(x.shape, cols, weight, bias is not None, stride, dilation, out_h, out_w)
        return out

    @staticmethod
    def backward(ctx, grad):
        x_shape, cols, weight, has_bias, stride, dilation, out_h, out_w = ctx.saved
        _, _, kh, kw = weight.shape
        grad_w = np.tensordot(grad, cols, axes=([0, 2, 3], [0, 2, 3]))  # (Cout, Cin, kh, kw)
        grad_cols = np.tensordot(grad, weight, axes=([1], [0]))  # (B, H', W', Cin, kh, kw)
        grad_x = np.zeros(x_shape, dtype=grad.dtype)
        h_stop = stride * (out_h - 1) + 1
        w_stop = stride * (out_w - 1) + 1
        for i in range(kh):
            for j in range(kw):
                r0, c0 = i * dilation, j * dilation
                grad_x[:, :, r0:r0 + h_stop:stride, c0:c0 + w_stop:stride] += \
                    grad_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        grad_b = grad.sum(axis=(0, 2, 3)) if has_bias else None
        return grad_x, grad_w, grad_b, None, None, None, None, None, None


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
    dilation: int = 1,
    padding_mode: str = "zero",
) -> Tensor:
    """
    2D cross-correlation

    Args:
        x: (B, Cin, H, W)
        weight: (Cout, Cin, kh, kw), kh/kw는 홀수
        bias: (Cout,) 또는 None
        stride, padding, dilation: 표준 의미 (padding은 양쪽 동일)

    Returns:
        (B, Cout, H', W'), H' = (H + 2·pad − dilation·(kh−1) − 1)/stride + 1
    """
    _require_rank(x, 4, "conv2d input")
    _require_rank(weight, 4, "conv2d weight")
    cout, cin, kh, kw = weight.shape
    if x.shape[1] != cin:
        raise ShapeError(f"conv2d: 입력 채널 차원(dim 1) {x.shape[1]} != weight Cin {cin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d: 커널 크기는 홀수여야 합니다 (kh={kh}, kw={kw})")
    if dilation < 1 or stride < 1:
        raise ShapeError(f"conv2d: stride/dilation은 1 이상이어야 합니다 (stride={stride}, dilation={dilation})")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {bias.shape} != ({cout},)")

    h, w = x.shape[2:]
    out_h = (h + 2 * padding - dilation * (kh - 1) - 1) // stride + 1
    out_w = (w + 2 * padding - dilation * (kw - 1) - 1) // stride + 1
    if out_h < 1:
        raise ShapeError(f"conv2d: 출력 높이(dim 2)가 1 미만입니다 (H={h}, pad={padding}, dilation={dilation}, kh={kh})")
    if out_w < 1:
        raise ShapeError(f"conv2d: 출력 너비(dim 3)가 1 미만입니다 (W={w}, pad={padding}, dilation={dilation}, kw={kw})")

    padded = pad2d(x, padding, padding, padding_mode) if padding else x
    return Conv2d.apply(padded, weight, bias, stride, dilation, kh, kw, out_h, out_w)


# ==================== 풀링/리사이즈 ====================

def adaptive_pool_matrix(size: int, out_size: int, dtype=np.float64) -> np.ndarray:
    """
    적응형 평균 풀링 행렬 (out_size, size)

    구간: start_i = floor(i·size/out), end_i = ceil((i+1)·size/out)
    """
    matrix = np.zeros((out_size, size), dtype=dtype)
    for i in range(out_size):
        start = (i * size) // out_size
        end = -((-(i + 1) * size) // out_size)
        matrix[i, start:end] = 1.0 / (end - start)
    return matrix


class SeparableLinear(Function):
    """out = Mh · x · Mwᵀ (마지막 두 축에 대한 분리 가능 선형 사상)"""

    @staticmethod
    def forward(ctx, x, mat_h, mat_w):
        ctx.save_for_backward(mat_h, mat_w)
        return np.einsum("ih,...hw,jw->...ij", mat_h, x, mat_w, optimize=True)

    @staticmethod
    def backward(ctx, grad):
        mat_h, mat_w = ctx.saved
        return np.einsum("ih,...ij,jw->...hw", mat_h, grad, mat_w, optimize=True), None, None


def adaptive_avg_pool(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """
    적응형 평균 풀링 (입력 해상도와 무관하게 고정 크기 출력)

    Args:
        x: (B, C, H, W)
        out_h, out_w: 출력 크기 (1 이상)
    """
    _require_rank(x, 4, "adaptive_avg_pool")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"adaptive_avg_pool: 출력 크기는 1 이상이어야 합니다 ({out_h}x{out_w})")
    dtype = x.dtype
    mat_h = adaptive_pool_matrix(x.shape[2], out_h, dtype)
    mat_w = adaptive_pool_matrix(x.shape[3], out_w, dtype)
    return SeparableLinear.apply(x, mat_h, mat_w)


def global_avg_pool(x: Tensor) -> Tensor:
    """(B, C, H, W) → (B, C) 공간 평균"""
    _require_rank(x, 4, "global_avg_pool")
    return x.mean(axis=(2, 3))


def _normalized_to_pixel(coord: np.ndarray, extent: int) -> np.ndarray:
    # (−1 → 0, 1 → extent−1), 범위 밖은 경계로 clamp
    return np.clip((coord + 1.0) * 0.5 * (extent - 1), 0.0, extent - 1)


def bilinear_matrix(size: int, out_size: int, dtype=np.float64) -> np.ndarray:
    """identity grid로 size → out_size 보간하는 행렬 (out_size, size)"""
    coords = np.linspace(-1.0, 1.0, out_size) if out_size > 1 else np.array([-1.0])
    pos = _normalized_to_pixel(coords, size)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, size - 1)
    frac = pos - lo
    matrix = np.zeros((out_size, size), dtype=dtype)
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """
    identity grid 기반 bilinear 리사이즈

    bilinear_grid_sample(x, identity_grid(out_h, out_w))와 동일합니다.
    """
    _require_rank(x, 4, "bilinear_resize")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"bilinear_resize: 출력 크기는 1 이상이어야 합니다 ({out_h}x{out_w})")
    mat_h = bilinear_matrix(x.shape[2], out_h, x.dtype)
    mat_w = bilinear_matrix(x.shape[3], out_w, x.dtype)
    return SeparableLinear.apply(x, mat_h, mat_w)


def identity_grid(height: int, width: int, batch: int = 1, dtype=None) -> np.ndarray:
    """(B, 2, H, W) 정규화 좌표 identity grid (채널 0 = x, 채널 1 = y)"""
    ys = np.linspace(-1.0, 1.0, height) if height > 1 else np.array([-1.0])
    xs = np.linspace(-1.0, 1.0, width) if width > 1 else np.array([-1.0])
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    grid = np.stack([gx, gy])[None].repeat(batch, axis=0)
    return grid.astype(dtype or get_default_dtype())


class GridSample(Function):
    @staticmethod
    def forward(ctx, x, grid):
        _, _, h, w = x.shape
        px = _normalized_to_pixel(grid[:, 0], w)
        py = _normalized_to_pixel(grid[:, 1], h)
        x0 = np.floor(px).astype(np.int64)
        y0 = np.floor(py).astype(np.int64)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        wx = (px - x0).astype(x.dtype)
        wy = (py - y0).astype(x.dtype)

        b_idx = np.arange(x.shape[0])[:, None, None]
        # (B, Hg, Wg, C)
        v00 = x.transpose(0, 2, 3, 1)[b_idx, y0, x0]
        v01 = x.transpose(0, 2, 3, 1)[b_idx, y0, x1]
        v10 = x.transpose(0, 2, 3, 1)[b_idx, y1, x0]
        v11 = x.transpose(0, 2, 3, 1)[b_idx, y1, x1]
        wx_ = wx[..., None]
        wy_ = wy[..., None]
        out = (v00 * (1 - wx_) * (1 - wy_) + v01 * wx_ * (1 - wy_)
               + v10 * (1 - wx_) * wy_ + v11 * wx_ * wy_)

        # clamp된 좌표는 grid 방향 gradient가 0
        inside_x = ((grid[:, 0] > -1.0) & (grid[:, 0] < 1.0)).astype(x.dtype)
        inside_y = ((grid[:, 1] > -1.0) & (grid[:, 1] < 1.0)).astype(x.dtype)
        ctx.save_for_backward(x.shape, (x0, x1, y0, y1), wx, wy, (v00, v01, v10, v11), inside_x, inside_y)
        return out.transpose(0, 3, 1, 2)

    @staticmethod
    def backward(ctx, grad):
        x_shape, (x0, x1, y0, y1), wx, wy, (v00, v01, v10, v11), inside_x, inside_y = ctx.saved
        bsz, channels, h, w = x_shape
        g = grad.transpose(0, 2, 3, 1)  # (B, Hg, Wg, C)
        wx_ = wx[..., None]
        wy_ = wy[..., None]

        grad_x = np.zeros((bsz, h, w, channels), dtype=grad.dtype)
        b_idx = np.broadcast_to(np.arange(bsz)[:, None, None], x0.shape)
        np.add.at(grad_x, (b_idx, y0, x0), g * (1 - wx_) * (1 - wy_))
        np.add.at(grad_x, (b_idx, y0, x1), g * wx_ * (1 - wy_))
        np.add.at(grad_x, (b_idx, y1, x0), g * (1 - wx_) * wy_)
        np.add.at(grad_x, (b_idx, y1, x1), g * wx_ * wy_)

        d_px = ((v01 - v00) * (1 - wy_) + (v11 - v10) * wy_) * g
        d_py = ((v10 - v00) * (1 - wx_) + (v11 - v01) * wx_) * g
        grad_grid = np.stack([
            d_px.sum(axis=-1) * 0.5 * (w - 1) * inside_x,
            d_py.sum(axis=-1) * 0.5 * (h - 1) * inside_y,
        ], axis=1)
        return grad_x.transpose(0, 3, 1, 2), grad_grid


def bilinear_grid_sample(x: Tensor, grid: Tensor) -> Tensor:
    """
    정규화 좌표 grid로 bilinear 샘플링

    Args:
        x: (B, C, H, W)
        grid: (B, 2, Hg, Wg), (−1,−1) → 픽셀 (0,0), (1,1) → (W−1, H−1);
              범위 밖 좌표는 경계로 clamp

    Returns:
        (B, C, Hg, Wg)
    """
    _require_rank(x, 4, "bilinear_grid_sample input")
    grid = _as_tensor(grid, x)
    _require_rank(grid, 4, "bilinear_grid_sample grid")
    if grid.shape[1] != 2:
        raise ShapeError(f"bilinear_grid_sample: grid 채널 수(dim 1)는 2여야 합니다: {grid.shape[1]}")
    if grid.shape[0] != x.shape[0]:
        raise ShapeError(f"bilinear_grid_sample: 배치 크기 불일치 {x.shape[0]} vs {grid.shape[0]}")
    return GridSample.apply(x, grid)


class UpsampleNearest(Function):
    @staticmethod
    def forward(ctx, x, factor):
        ctx.save_for_backward(factor)
        return x.repeat(factor, axis=2).repeat(factor, axis=3)

    @staticmethod
    def backward(ctx, grad):
        (factor,) = ctx.saved
        b, c, h, w = grad.shape
        folded = grad.reshape(b, c, h // factor, factor, w // factor, factor)
        return folded.sum(axis=(3, 5)), None


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """최근접 이웃 업샘플링"""
    _require_rank(x, 4, "upsample_nearest")
    return UpsampleNearest.apply(x, factor)


# ==================== 어텐션 ====================

def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ Wᵀ + b, weight: (out, in)"""
    out = x @ weight.transpose(1, 0)
    return out + bias if bias is not None else out


def self_attention(
    x: Tensor,
    wq: Tensor, bq: Tensor,
    wk: Tensor, bk: Tensor,
    wv: Tensor, bv: Tensor,
    wo: Tensor, bo: Tensor,
) -> Tensor:
    """
    단일 헤드 공간 self-attention + residual

    공간 격자를 토큰으로 펼친 뒤 scaled dot-product attention을 적용하고
    입력에 더합니다. 출력 shape은 입력과 동일합니다.
    """
    _require_rank(x, 4, "self_attention")
    b, c, h, w = x.shape
    if wq.shape != (c, c):
        raise ShapeError(f"self_attention: 투영 행렬 shape {wq.shape} != ({c}, {c})")
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError("self_attention: 입력에 NaN/Inf가 있습니다")

    tokens = x.reshape(b, c, h * w).transpose(0, 2, 1)  # (B, N, C)
    q = linear(tokens, wq, bq)
    k = linear(tokens, wk, bk)
    v = linear(tokens, wv, bv)
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(c))
    attn = softmax(scores, axis=-1)
    out = linear(attn @ v, wo, bo)
    return x + out.transpose(0, 2, 1).reshape(b, c, h, w)


# ==================== 시간 임베딩 ====================

def time_embedding(t: int, dim: int) -> Tensor:
    """
    사인파 시간 임베딩 (앞쪽 절반 sin, 뒤쪽 절반 cos)

    주파수: 10000^(−i/(dim/2)), i = 0..dim/2−1
    """
    if dim % 2 != 0:
        raise ShapeError(f"time_embedding: dim은 짝수여야 합니다: {dim}")
    half = dim // 2
    freqs = np.power(10000.0, -np.arange(half, dtype=np.float64) / half)
    angles = float(t) * freqs
    return Tensor(np.concatenate([np.sin(angles), np.cos(angles)]))


def time_embedding_batch(timesteps, dim: int) -> Tensor:
    """배치 시간 임베딩 (B, dim)"""
    return Tensor(np.stack([time_embedding(int(t), dim).data for t in np.ravel(timesteps)]))
