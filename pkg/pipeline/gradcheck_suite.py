"""
Gradcheck Suite - 모든 미분 가능 연산과 전체 그래프의 중앙 차분 검사

64비트 모드에서 케이스마다 여러 시드로 실행하며, 최대 상대 오차가
tol(1e-4) 이상인 케이스가 하나라도 있으면 GradcheckError를 냅니다.
큰 그래프(PFM, denoiser, CPB)는 모든 텐서에서 원소를 일부만 샘플링합니다.
"""
import logging
import time
import zlib
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from autograd import functional as F
from autograd.gradcheck import gradcheck
from autograd.params import ParamStore
from autograd.tensor import Tensor, concat, float64_mode
from core.errors import GradcheckError
from core.utils import make_rng
from evaluation.losses import FrequencyBand, cpb_loss, lowpass, task_loss
from models.blocks import ResBlock
from models.builder import build_model
from models.denoiser import DenoiserConfig
from models.pfm import PriorFusion, TaskConvFusion
from models.tasks import TaskRegistry

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = 10
DEFAULT_TOL = 1e-4
DEFAULT_EPS = 1e-6
# 전체 그래프 케이스의 텐서당 샘플 원소 수
GRAPH_SAMPLES = 8

# (loss 함수, 검사할 텐서, 텐서당 샘플 수)
Case = Tuple[Callable[[], Tensor], Sequence[Tensor], Optional[int]]


@dataclass
class CheckResult:
    name: str
    seed: int
    max_rel_err: float
    passed: bool


def _leaf(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _project(out: Tensor, rng: np.random.Generator) -> Tensor:
    """고정 난수 가중합으로 스칼라화 (출력 전체 gradient 검사)"""
    weights = Tensor(rng.standard_normal(out.shape))
    return (out * weights).sum()


# ==================== 연산 단위 케이스 ====================

def case_elementwise(rng: np.random.Generator) -> Case:
    a = _leaf(rng, 3, 4)
    b = _leaf(rng, 3, 4)
    c = _leaf(rng, 4)

    def fn():
        y = a * b + a / (b * b + 1.0) - (a * 0.5).exp() * 0.1 + (b * b + 1.0).log()
        y = y.tanh() + (a * c).sigmoid() + (b * b + 0.5).sqrt() + (a - c) ** 3
        y = F.silu(y) + F.softmax(y, axis=1)
        return (y.sum(axis=0) * c).mean() + y.transpose(1, 0).reshape(2, 6)[1].sum()

    return fn, [a, b, c], None


def case_structural(rng: np.random.Generator) -> Case:
    a = _leaf(rng, 2, 3, 4)
    b = _leaf(rng, 2, 4, 5)
    w = Tensor(rng.standard_normal((2, 3, 10)))

    def fn():
        prod = a @ b  # (2, 3, 5)
        joined = concat([prod, prod * 2.0], axis=2)
        return (joined * w).sum() + a[:, 1:, ::2].sum()

    return fn, [a, b], None


def case_conv2d(rng: np.random.Generator) -> Case:
    x = _leaf(rng, 2, 3, 7, 7)
    w1 = _leaf(rng, 4, 3, 3, 3)
    b1 = _leaf(rng, 4)
    w2 = _leaf(rng, 2, 4, 3, 3)

    def fn():
        strided = F.conv2d(x, w1, b1, stride=2, padding=1)
        dilated = F.conv2d(strided, w2, None, padding=2, dilation=2, padding_mode="reflect")
        same = F.conv2d(x, w1, b1, padding=1)
        return _project(dilated, np.random.default_rng(0)) + _project(same, np.random.default_rng(1))

    return fn, [x, w1, b1, w2], None


def case_padding(rng: np.random.Generator) -> Case:
    x = _leaf(rng, 1, 2, 5, 6)

    def fn():
        total = None
        for k, mode in enumerate(("zero", "reflect", "edge")):
            term = _project(F.pad2d(x, 2, 3, mode), np.random.default_rng(k))
            total = term if total is None else total + term
        return total

    return fn, [x], None


def case_resampling(rng: np.random.Generator) -> Case:
    x = _leaf(rng, 1, 2, 7, 5)
    grid = _leaf(rng, 1, 2, 4, 6, low=-0.95, high=0.95)

    def fn():
        pooled = _project(F.adaptive_avg_pool(x, 3, 2), np.random.default_rng(0))
        resized = _project(F.bilinear_resize(x, 9, 4), np.random.default_rng(1))
        up = _project(F.upsample_nearest(x, 2), np.random.default_rng(2))
        sampled = _project(F.bilinear_grid_sample(x, grid), np.random.default_rng(3))
        return pooled + resized + up + sampled + F.global_avg_pool(x).sum()

    return fn, [x, grid], None


def case_attention(rng: np.random.Generator) -> Case:
    c = 3
    x = _leaf(rng, 2, c, 3, 2)
    params = [_leaf(rng, c, c, low=-0.5, high=0.5) if i % 2 == 0 else _leaf(rng, c, low=-0.1, high=0.1)
              for i in range(8)]

    def fn():
        return _project(F.self_attention(x, *params), np.random.default_rng(0))

    return fn, [x] + params, None


def case_losses(rng: np.random.Generator) -> Case:
    pred = _leaf(rng, 2, 3, 8, 8)
    # L1 꺾임점을 피하도록 gt를 한쪽으로 충분히 떨어뜨림
    gt = Tensor(pred.data - rng.uniform(0.2, 0.5, size=pred.shape))
    bm = _leaf(rng, 2, 2, 4, 4, low=-0.9, high=0.9)
    bm_gt = Tensor(bm.data + rng.uniform(0.05, 0.1, size=bm.shape))
    registry = TaskRegistry(slots=8)

    def fn():
        smooth = _project(lowpass(pred, 1.0), np.random.default_rng(0))
        high = _project(FrequencyBand("high", 1.0).apply(pred), np.random.default_rng(1))
        return smooth + high + task_loss(pred, gt, "deshadow", registry=registry, sigma=1.0) + cpb_loss(bm, bm_gt)

    return fn, [pred, bm], None


# ==================== 모듈/그래프 케이스 ====================

TINY_CONFIG = dict(stage_channels=[2, 3, 4, 4], task_slots=3, time_dim=4, pfm_hidden=3,
                   cpb_grid=4, cpb_branch_channels=2)


def _store_params(store: ParamStore) -> List[Tensor]:
    return [value for _, value in store.trainable_items()]


def case_resblock(rng: np.random.Generator) -> Case:
    store = ParamStore()
    block = ResBlock(store, "block", 2, 3, rng, time_dim=4)
    x = _leaf(rng, 2, 2, 5, 5)
    temb = _leaf(rng, 2, 4)

    def fn():
        return _project(block(x, temb), np.random.default_rng(0))

    return fn, [x, temb] + _store_params(store), None


def case_pfm(rng: np.random.Generator) -> Case:
    store = ParamStore()
    fusion = PriorFusion(store, "pfm.stage2", 3, 2, 4, 10, 5, rng)
    ablation = TaskConvFusion(store, "pfm.ablation", 3, 2, 4, rng)
    f = _leaf(rng, 2, 3, 4, 4)
    prior = _leaf(rng, 2, 10, 16, 16, low=0.0, high=1.0)
    task = Tensor(np.eye(4)[[1, 3]])

    def fn():
        return (_project(fusion(f, task, prior), np.random.default_rng(0))
                + _project(ablation(f, task), np.random.default_rng(1)))

    return fn, [f, prior] + _store_params(store), GRAPH_SAMPLES


def case_denoiser(rng: np.random.Generator) -> Case:
    config = DenoiserConfig(**TINY_CONFIG)
    tasks = TaskRegistry(slots=3, tasks=["deblur", "deshadow"])
    model = build_model(config, int(rng.integers(1 << 31)), tasks=tasks)
    x_t = _leaf(rng, 1, 3, 16, 16)
    x_d = Tensor(rng.uniform(-1.0, 1.0, size=(1, 3, 16, 16)))
    prior = Tensor(rng.uniform(0.0, 1.0, size=(1, 10, 16, 16)))
    task = model.tasks.get("deshadow")

    def fn():
        return _project(model.denoiser(x_t, x_d, task, prior, 37), np.random.default_rng(0))

    return fn, [x_t] + _store_params(model.store), GRAPH_SAMPLES


def case_cpb(rng: np.random.Generator) -> Case:
    config = DenoiserConfig(**TINY_CONFIG)
    model = build_model(config, int(rng.integers(1 << 31)), tasks=TaskRegistry(slots=3, tasks=["deblur"]),
                        with_cpb=True)
    model.store.freeze_all_except(["cpb"])
    x_d = _leaf(rng, 1, 3, 16, 16)
    bm_gt = Tensor(rng.uniform(-1.0, 1.0, size=(1, 2, 4, 4)))

    def fn():
        bm = model.cpb(x_d)
        return _project(bm, np.random.default_rng(0)) + ((bm - bm_gt) ** 2).mean()

    return fn, [x_d] + _store_params(model.store), GRAPH_SAMPLES


CASES: Dict[str, Callable[[np.random.Generator], Case]] = {
    "elementwise": case_elementwise,
    "structural": case_structural,
    "conv2d": case_conv2d,
    "padding": case_padding,
    "resampling": case_resampling,
    "attention": case_attention,
    "losses": case_losses,
    "resblock": case_resblock,
    "pfm": case_pfm,
    "denoiser": case_denoiser,
    "cpb": case_cpb,
}


def run_case(name: str, seed: int, tol: float = DEFAULT_TOL, eps: float = DEFAULT_EPS) -> CheckResult:
    with float64_mode():
        rng = make_rng(seed, zlib.crc32(name.encode("utf-8")))
        fn, tensors, samples = CASES[name](rng)
        error = gradcheck(fn, tensors, eps=eps, samples_per_tensor=samples, rng=rng)
    return CheckResult(name=name, seed=seed, max_rel_err=float(error),
                       passed=bool(np.isfinite(error) and error < tol))


def run_suite(seeds: int = DEFAULT_SEEDS, cases: Optional[List[str]] = None, tol: float = DEFAULT_TOL,
              progress: bool = True) -> List[CheckResult]:
    """
    전체 gradient 검사

    Args:
        seeds: 케이스당 시드 수
        cases: 실행할 케이스 이름 (기본: 전체)
        tol: 최대 상대 오차 허용치

    Returns:
        CheckResult 목록

    Raises:
        GradcheckError: 하나라도 실패하면 (모든 케이스 실행 후)
    """
    names = cases or list(CASES)
    unknown = [n for n in names if n not in CASES]
    if unknown:
        raise GradcheckError(f"알 수 없는 gradcheck 케이스: {unknown} (가능: {', '.join(CASES)})")

    started = time.perf_counter()
    results = []
    jobs = [(name, seed) for name in names for seed in range(seeds)]
    for name, seed in tqdm(jobs, desc="gradcheck", disable=not progress, leave=False):
        result = run_case(name, seed, tol)
        results.append(result)
        if not result.passed:
            logger.warning(f"gradcheck 실패: {name} seed={seed} err={result.max_rel_err:.3e}")

    for name in names:
        worst = max(r.max_rel_err for r in results if r.name == name)
        logger.info(f"{name}: max_rel_err={worst:.3e}")
    logger.info(f"gradcheck {len(results)}건 완료 ({time.perf_counter() - started:.1f}s)")

    failed = [r for r in results if not r.passed]
    if failed:
        summary = ", ".join(f"{r.name}/seed{r.seed}={r.max_rel_err:.2e}" for r in failed[:5])
        raise GradcheckError(f"gradcheck 실패 {len(failed)}건: {summary}")
    return results
