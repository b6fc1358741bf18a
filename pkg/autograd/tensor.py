"""
Tensor - 역방향 자동 미분을 지원하는 최소 dense 텐서

각 연산은 Function 서브클래스로 정의되며, forward는 numpy 배열을 받아
numpy 배열을 반환하고 backward는 입력별 gradient 튜플을 반환합니다.
"""
from contextlib import contextmanager
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ShapeError

_DEFAULT_DTYPE = np.float32
_GRAD_ENABLED = True


def get_default_dtype():
    return _DEFAULT_DTYPE


@contextmanager
def float64_mode():
    """검증용 64비트 모드 (이 블록 안에서 생성되는 텐서는 float64)"""
    global _DEFAULT_DTYPE
    previous = _DEFAULT_DTYPE
    _DEFAULT_DTYPE = np.float64
    try:
        yield
    finally:
        _DEFAULT_DTYPE = previous


@contextmanager
def no_grad():
    """그래프 기록 없이 forward만 수행 (추론/샘플링용)"""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


class Context:
    """backward에 필요한 값을 보관하는 컨텍스트"""

    def __init__(self):
        self.saved: Tuple = ()

    def save_for_backward(self, *values) -> None:
        self.saved = values


class Function:
    """미분 가능한 연산의 기본 클래스"""

    @staticmethod
    def forward(ctx: Context, *args, **kwargs) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: Context, grad_output: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *args, **kwargs) -> "Tensor":
        ctx = Context()
        raw = [a.data if isinstance(a, Tensor) else a for a in args]
        out_data = np.asarray(cls.forward(ctx, *raw, **kwargs))
        # 출력이 입력 버퍼를 공유하지 않도록 보장
        for a in raw:
            if isinstance(a, np.ndarray) and np.may_share_memory(out_data, a):
                out_data = out_data.copy()
                break
        requires_grad = _GRAD_ENABLED and any(
            isinstance(a, Tensor) and a.requires_grad for a in args
        )
        out = Tensor._wrap(out_data, requires_grad)
        if requires_grad:
            out._ctx = (cls, ctx, args)
        return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """브로드캐스트된 gradient를 원래 shape로 합산"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _as_tensor(value: Any, like: "Tensor") -> "Tensor":
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=like.data.dtype), False)


class Tensor:
    """
    dense 텐서

    Attributes:
        data: 연속 메모리 numpy 배열 (float32, 검증 모드에서 float64)
        requires_grad: gradient 계산 여부
        grad: backward 이후 채워지는 동일 shape 텐서 (leaf 전용)
    """

    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False, dtype=None):
        self.data = np.array(data, dtype=dtype or _DEFAULT_DTYPE, copy=True)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[Tensor] = None
        self._ctx = None

    @classmethod
    def _wrap(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(_DEFAULT_DTYPE)
        out.data = np.ascontiguousarray(data)
        out.requires_grad = requires_grad
        out.grad = None
        out._ctx = None
        return out

    # ==================== 기본 속성 ====================

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data.copy(), False)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # ==================== 자동 미분 ====================

    def backward(self) -> None:
        """
        스칼라 손실에서 역전파

        도달 가능한 모든 requires_grad leaf의 grad에 gradient를 누적합니다.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward는 스칼라 텐서에서만 호출할 수 있습니다: shape={self.shape}")
        if not self.requires_grad:
            raise ShapeError("requires_grad=False 텐서에서 backward를 호출했습니다")

        order = self._topological_order()
        grads = {id(self): np.ones_like(self.data)}

        for node in reversed(order):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node._ctx is None:
                if node.grad is None:
                    node.grad = Tensor._wrap(grad.astype(node.data.dtype, copy=True), False)
                else:
                    node.grad.data = node.grad.data + grad
                continue

            fn, ctx, args = node._ctx
            input_grads = fn.backward(ctx, grad)
            for arg, arg_grad in zip(args, input_grads):
                if arg_grad is None or not isinstance(arg, Tensor) or not arg.requires_grad:
                    continue
                if arg_grad.shape != arg.shape:
                    arg_grad = _unbroadcast(arg_grad, arg.shape)
                key = id(arg)
                # fan-out gradient는 합산
                grads[key] = grads[key] + arg_grad if key in grads else arg_grad

    def _topological_order(self) -> List["Tensor"]:
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx[2]:
                    if isinstance(parent, Tensor) and parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    # ==================== 연산자 ====================

    def __add__(self, other):
        return Add.apply(self, _as_tensor(other, self))

    def __radd__(self, other):
        return Add.apply(_as_tensor(other, self), self)

    def __sub__(self, other):
        return Sub.apply(self, _as_tensor(other, self))

    def __rsub__(self, other):
        return Sub.apply(_as_tensor(other, self), self)

    def __mul__(self, other):
        return Mul.apply(self, _as_tensor(other, self))

    def __rmul__(self, other):
        return Mul.apply(_as_tensor(other, self), self)

    def __truediv__(self, other):
        return Div.apply(self, _as_tensor(other, self))

    def __rtruediv__(self, other):
        return Div.apply(_as_tensor(other, self), self)

    def __neg__(self):
        return Mul.apply(self, _as_tensor(-1.0, self))

    def __pow__(self, exponent: float):
        return Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other):
        return MatMul.apply(self, _as_tensor(other, self))

    def __getitem__(self, index):
        return Index.apply(self, index=index)

    def sum(self, axis=None, keepdims: bool = False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return Mean.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Transpose.apply(self, axes=axes or None)

    def exp(self):
        return Exp.apply(self)

    def log(self):
        return Log.apply(self)

    def sqrt(self):
        return Pow.apply(self, exponent=0.5)

    def abs(self):
        return Abs.apply(self)

    def tanh(self):
        return Tanh.apply(self)

    def sigmoid(self):
        return Sigmoid.apply(self)

    def clip(self, low: float, high: float):
        return Clip.apply(self, low=low, high=high)


def tensor(data: Any, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def zeros(shape: Sequence[int], requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(tuple(shape)), requires_grad=requires_grad)


def ones(shape: Sequence[int], requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(tuple(shape)), requires_grad=requires_grad)


# ==================== 요소별 연산 ====================

class Add(Function):
    @staticmethod
    def forward(ctx, a, b):
        return a + b

    @staticmethod
    def backward(ctx, grad):
        return grad, grad


class Sub(Function):
    @staticmethod
    def forward(ctx, a, b):
        return a - b

    @staticmethod
    def backward(ctx, grad):
        return grad, -grad


class Mul(Function):
    @staticmethod
    def forward(ctx, a, b):
        ctx.save_for_backward(a, b)
        return a * b

    @staticmethod
    def backward(ctx, grad):
        a, b = ctx.saved
        return grad * b, grad * a


class Div(Function):
    @staticmethod
    def forward(ctx, a, b):
        ctx.save_for_backward(a, b)
        return a / b

    @staticmethod
    def backward(ctx, grad):
        a, b = ctx.saved
        return grad / b, -grad * a / (b * b)


class Pow(Function):
    @staticmethod
    def forward(ctx, a, exponent):
        ctx.save_for_backward(a, exponent)
        return np.power(a, exponent)

    @staticmethod
    def backward(ctx, grad):
        a, exponent = ctx.saved
        return (grad * exponent * np.power(a, exponent - 1.0),)


class Exp(Function):
    @staticmethod
    def forward(ctx, a):
        out = np.exp(a)
        ctx.save_for_backward(out)
        return out

    @staticmethod
    def backward(ctx, grad):
        (out,) = ctx.saved
        return (grad * out,)


class Log(Function):
    @staticmethod
    def forward(ctx, a):
        ctx.save_for_backward(a)
        return np.log(a)

    @staticmethod
    def backward(ctx, grad):
        (a,) = ctx.saved
        return (grad / a,)


class Abs(Function):
    @staticmethod
    def forward(ctx, a):
        ctx.save_for_backward(a)
        return np.abs(a)

    @staticmethod
    def backward(ctx, grad):
        (a,) = ctx.saved
        return (grad * np.sign(a),)


class Tanh(Function):
    @staticmethod
    def forward(ctx, a):
        out = np.tanh(a)
        ctx.save_for_backward(out)
        return out

    @staticmethod
    def backward(ctx, grad):
        (out,) = ctx.saved
        return (grad * (1.0 - out * out),)


class Sigmoid(Function):
    @staticmethod
    def forward(ctx, a):
        out = 0.5 * (np.tanh(0.5 * a) + 1.0)
        ctx.save_for_backward(out)
        return out

    @staticmethod
    def backward(ctx, grad):
        (out,) = ctx.saved
        return (grad * out * (1.0 - out),)


class Clip(Function):
    @staticmethod
    def forward(ctx, a, low, high):
        ctx.save_for_backward((a >= low) & (a <= high))
        return np.clip(a, low, high)

    @staticmethod
    def backward(ctx, grad):
        (mask,) = ctx.saved
        return (grad * mask,)


# ==================== 축소/구조 연산 ====================

def _expand_reduced(grad: np.ndarray, shape, axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad.reshape((1,) * len(shape)), shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        for a in sorted(axes):
            grad = np.expand_dims(grad, a)
    return np.broadcast_to(grad, shape)


class Sum(Function):
    @staticmethod
    def forward(ctx, a, axis, keepdims):
        ctx.save_for_backward(a.shape, axis, keepdims)
        return np.sum(a, axis=axis, keepdims=keepdims)

    @staticmethod
    def backward(ctx, grad):
        shape, axis, keepdims = ctx.saved
        return (np.array(_expand_reduced(grad, shape, axis, keepdims)),)


class Mean(Function):
    @staticmethod
    def forward(ctx, a, axis, keepdims):
        out = np.mean(a, axis=axis, keepdims=keepdims)
        ctx.save_for_backward(a.shape, axis, keepdims, a.size // max(np.size(out), 1))
        return out

    @staticmethod
    def backward(ctx, grad):
        shape, axis, keepdims, count = ctx.saved
        return (np.array(_expand_reduced(grad, shape, axis, keepdims)) / count,)


class Reshape(Function):
    @staticmethod
    def forward(ctx, a, shape):
        ctx.save_for_backward(a.shape)
        return a.reshape(shape)

    @staticmethod
    def backward(ctx, grad):
        (shape,) = ctx.saved
        return (grad.reshape(shape),)


class Transpose(Function):
    @staticmethod
    def forward(ctx, a, axes):
        axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
        ctx.save_for_backward(axes)
        return np.transpose(a, axes)

    @staticmethod
    def backward(ctx, grad):
        (axes,) = ctx.saved
        return (np.transpose(grad, np.argsort(axes)),)


class Index(Function):
    @staticmethod
    def forward(ctx, a, index):
        ctx.save_for_backward(a.shape, a.dtype, index)
        return a[index]

    @staticmethod
    def backward(ctx, grad):
        shape, dtype, index = ctx.saved
        out = np.zeros(shape, dtype=grad.dtype)
        np.add.at(out, index, grad)
        return (out,)


class MatMul(Function):
    @staticmethod
    def forward(ctx, a, b):
        ctx.save_for_backward(a, b)
        return np.matmul(a, b)

    @staticmethod
    def backward(ctx, grad):
        a, b = ctx.saved
        grad_a = np.matmul(grad, np.swapaxes(b, -1, -2))
        grad_b = np.matmul(np.swapaxes(a, -1, -2), grad)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)


class Concat(Function):
    @staticmethod
    def forward(ctx, *arrays, axis=0):
        ctx.save_for_backward(axis, [x.shape[axis] for x in arrays])
        return np.concatenate(arrays, axis=axis)

    @staticmethod
    def backward(ctx, grad):
        axis, sizes = ctx.saved
        splits = np.cumsum(sizes)[:-1]
        return tuple(np.split(grad, splits, axis=axis))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """채널 등 지정 축으로 텐서 연결"""
    if not tensors:
        raise ShapeError("concat에 빈 텐서 목록이 전달되었습니다")
    reference = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(reference):
            raise ShapeError(f"concat 차원 불일치: {reference} vs {t.shape}")
        for dim, (x, y) in enumerate(zip(reference, t.shape)):
            if dim != axis % len(reference) and x != y:
                raise ShapeError(f"concat 축 {dim} 크기 불일치: {x} vs {y}")
    return Concat.apply(*tensors, axis=axis)
