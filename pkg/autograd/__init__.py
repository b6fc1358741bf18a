"""최소 dense 텐서 라이브러리와 역방향 자동 미분"""
from autograd.tensor import Tensor, concat, float64_mode, no_grad, get_default_dtype
from autograd.params import ParamStore, PARAM_GROUPS
from autograd.optim import OptimizerState, adamw_step
from autograd.gradcheck import gradcheck, assert_gradcheck
from autograd import functional

__all__ = [
    "Tensor",
    "concat",
    "float64_mode",
    "no_grad",
    "get_default_dtype",
    "ParamStore",
    "PARAM_GROUPS",
    "OptimizerState",
    "adamw_step",
    "gradcheck",
    "assert_gradcheck",
    "functional",
]
