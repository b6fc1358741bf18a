"""
Training - 2단계 학습과 태스크 확장

Stage 1: 인코더 + PPB(mid, decoder, pfm)를 픽셀 태스크로 학습
Stage 2: 인코더를 동결하고 CPB만 backward map L1으로 학습
Extend:  pfm 그룹만 학습 가능하게 두고 새 태스크를 빈 슬롯에 추가
"""
import logging
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from autograd.optim import OptimizerState, adamw_step
from autograd.params import ParamStore
from autograd.tensor import Tensor
from core.errors import CheckpointContentError, TaskError, TrainingDivergedError
from core.utils import derive_seed, make_rng, write_json
from diffusion.schedule import forward_noise_batch, to_diffusion_range
from evaluation.losses import cpb_loss, task_loss
from evaluation.metrics import psnr
from models.builder import UniDocModel, build_model
from models.tasks import TaskRegistry
from pipeline.checkpoint import model_from_checkpoint, read_checkpoint, save_checkpoint
from pipeline.config import RunConfig, merge_architecture
from pipeline.inference import Restorer
from priors.pool import build_prior_batch
from synth.dataset import make_pairs
from synth.degradations import DEGRADATIONS, SamplePair
from synth.warps import warp_batch

logger = logging.getLogger(__name__)

# 시드 스트림 (같은 seed라도 단계/용도별로 다른 데이터)
STAGE1_STREAM = 11
STAGE2_STREAM = 12
EXTEND_STREAM = 13
VALIDATION_STREAM = 21
REFERENCE_STREAM = 22

# (task 이름, 배치 쌍 시드, 스칼라 손실 Tensor)
BatchStep = Callable[[int], Tuple[str, List[int], Tensor]]


@dataclass
class TrainResult:
    """학습 결과 요약"""

    stage: str
    checkpoint: str
    losses: List[float] = field(default_factory=list)
    tasks: List[str] = field(default_factory=list)
    validation: List[Dict] = field(default_factory=list)
    group_sizes: Dict[str, int] = field(default_factory=dict)
    report: Dict = field(default_factory=dict)

    def windows(self, window: int) -> Dict[str, float]:
        return loss_windows(self.losses, window)

    def task_losses(self, task: str) -> List[float]:
        return [loss for loss, name in zip(self.losses, self.tasks) if name == task]


def loss_windows(losses: List[float], window: int) -> Dict[str, float]:
    """처음/마지막 window개 손실 평균 (짧은 기록은 절반씩)"""
    if not losses:
        return {"first": float("nan"), "last": float("nan"), "window": 0}
    size = max(1, min(window, len(losses) // 2 or 1))
    return {
        "first": float(np.mean(losses[:size])),
        "last": float(np.mean(losses[-size:])),
        "window": size,
    }


def _progress_disabled(cfg: RunConfig) -> bool:
    return cfg.quiet or not sys.stderr.isatty()


# ==================== 공통 루프 ====================

def run_training_loop(stage: str, iters: int, cfg: RunConfig, store: ParamStore, step: BatchStep,
                      validate: Optional[Callable[[int], Dict]] = None) -> TrainResult:
    """
    단일 writer 학습 루프: zero_grad → forward/loss → backward → AdamW

    Raises:
        TrainingDivergedError: 손실이 NaN/Inf (nan_dump.json 저장 후)
    """
    opt = OptimizerState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    result = TrainResult(stage=stage, checkpoint="")
    for i in tqdm(range(iters), desc=stage, disable=_progress_disabled(cfg), leave=False):
        store.zero_grad()
        task, seeds, loss = step(i)
        value = float(loss.item())
        if not np.isfinite(value):
            dump = {"stage": stage, "iteration": i + 1, "task": task, "pair_seeds": seeds,
                    "loss": repr(value), "seed": cfg.seed}
            write_json(cfg.output_path("nan_dump.json"), dump)
            raise TrainingDivergedError(
                f"{stage} iter={i + 1} task={task}에서 손실이 {value}입니다 "
                f"(진단 정보: {cfg.output_path('nan_dump.json')})"
            )
        loss.backward()
        adamw_step(store, opt)
        result.losses.append(value)
        result.tasks.append(task)

        if (i + 1) % cfg.log_every == 0 or i == 0:
            logger.info(f"iter={i + 1} task={task} loss={value:.6f}")
        if validate is not None and (i + 1) % cfg.val_every == 0:
            result.validation.append(validate(i + 1))
    return result


# ==================== 데이터 ====================

def _pixel_batch(task: str, seeds: List[int], size: int) -> Tuple[np.ndarray, np.ndarray]:
    pairs = make_pairs(task, seeds, size)
    return np.stack([p.input for p in pairs]), np.stack([p.gt for p in pairs])


def validation_pairs(cfg: RunConfig, task: str, task_index: int) -> List[SamplePair]:
    seeds = [derive_seed(cfg.seed, VALIDATION_STREAM, task_index, k) for k in range(cfg.val_samples)]
    return make_pairs(task, seeds, cfg.image_size)


def pixel_step(model: UniDocModel, cfg: RunConfig, stream: int,
               choose_task: Callable[[np.random.Generator], str]) -> BatchStep:
    """픽셀 태스크 한 반복: 태스크 선택 → 쌍 → t 샘플 → forward_noise → x̂0 → 손실"""
    sched = cfg.schedule()
    settings = cfg.prior_settings()
    weights = cfg.loss_weights()

    def step(i: int) -> Tuple[str, List[int], Tensor]:
        rng = make_rng(cfg.seed, stream, i)
        task = choose_task(rng)
        seeds = [derive_seed(cfg.seed, stream, i, b) for b in range(cfg.batch_size)]
        x_d, gt = _pixel_batch(task, seeds, cfg.image_size)
        x0 = to_diffusion_range(gt)
        ts = rng.integers(0, sched.T_max + 1, size=len(seeds))
        eps = rng.standard_normal(x0.shape).astype(np.float32)
        x_t = forward_noise_batch(x0, ts, eps, sched)
        prior = build_prior_batch(x_d, settings) if cfg.uses_prior_pool else None
        vector = model.tasks.get(task)
        pred = model.denoiser(x_t, to_diffusion_range(x_d), vector, prior, ts)
        loss = task_loss(pred, Tensor(x0), vector, weights, use_freq=cfg.use_freq_loss,
                         sigma=cfg.freq_sigma)
        return task, seeds, loss

    return step


def pixel_validator(model: UniDocModel, cfg: RunConfig, tasks: List[str]) -> Callable[[int], Dict]:
    """태스크별 검증 쌍을 샘플러로 복원해 PSNR 기록"""
    restorer = Restorer.from_model(model, cfg)
    fixed = {task: validation_pairs(cfg, task, model.tasks.get(task).index) for task in tasks}

    def validate(iteration: int) -> Dict:
        record: Dict = {"iter": iteration}
        for task, pairs in fixed.items():
            inputs = np.stack([p.input for p in pairs])
            restored = restorer.restore_batch(inputs, task, seed=derive_seed(cfg.seed, VALIDATION_STREAM))
            record[task] = float(np.mean([psnr(r, p.gt) for r, p in zip(restored, pairs)]))
            record[f"{task}_input"] = float(np.mean([psnr(p.input, p.gt) for p in pairs]))
            logger.info(f"val iter={iteration} task={task} psnr={record[task]:.2f} "
                        f"(input {record[f'{task}_input']:.2f})")
        return record

    return validate


def _log_groups(model: UniDocModel) -> Dict[str, int]:
    sizes = model.group_sizes()
    logger.info("파라미터 그룹: " + ", ".join(f"{k}={v}" for k, v in sorted(sizes.items())))
    return sizes


def _load_for_training(cfg: RunConfig, ckpt: Optional[str], required: str) -> Tuple[UniDocModel, RunConfig]:
    path = ckpt or cfg.checkpoint
    if not path:
        raise CheckpointContentError("학습을 이어갈 체크포인트 경로가 필요합니다 (--checkpoint)")
    data = read_checkpoint(path)
    if not data.has_group(required):
        raise CheckpointContentError(f"체크포인트에 {required} 파라미터가 없습니다: {path}")
    cfg = merge_architecture(cfg, data.run_config)
    return model_from_checkpoint(data, cfg), cfg


# ==================== Stage 1 ====================

def train_stage1(cfg: RunConfig, model: Optional[UniDocModel] = None, save: bool = True) -> TrainResult:
    """
    Stage 1: 태스크를 균등하게 뽑아 인코더와 PPB 학습

    Args:
        cfg: 실행 설정 (tasks, stage1_iters, image_size, batch_size ...)
        model: 이어서 학습할 모델 (기본: cfg.seed로 새로 생성)
        save: stage1.uddf 저장 여부

    Returns:
        TrainResult (checkpoint 경로, 손실 기록, 검증 PSNR)
    """
    tasks = TaskRegistry(slots=cfg.task_slots, tasks=cfg.tasks)
    model = model or build_model(cfg.denoiser_config(), cfg.seed, tasks=tasks)
    model.store.unfreeze()
    sizes = _log_groups(model)

    step = pixel_step(model, cfg, STAGE1_STREAM, lambda rng: cfg.tasks[int(rng.integers(len(cfg.tasks)))])
    validate = pixel_validator(model, cfg, cfg.tasks)
    result = run_training_loop("stage1", cfg.stage1_iters, cfg, model.store, step, validate)
    result.group_sizes = sizes
    result.report = {"windows": result.windows(cfg.loss_window), "variant": cfg.variant}

    write_json(cfg.output_path("stage1_losses.json"), {"losses": result.losses, "tasks": result.tasks,
                                                       "validation": result.validation})
    if save:
        result.checkpoint = save_checkpoint(model.store, cfg, cfg.output_path("stage1.uddf"), model.tasks,
                                            stage="stage1")
    logger.info(f"stage1 완료: {result.report['windows']}")
    return result


# ==================== Stage 2 ====================

def train_stage2(cfg: RunConfig, ckpt: Optional[str] = None, model: Optional[UniDocModel] = None,
                 save: bool = True) -> TrainResult:
    """
    Stage 2: 인코더 동결, 합성 왜곡 쌍으로 CPB 학습

    반복마다 이미지 크기를 stage2_sizes 중에서 무작위로 고릅니다.

    Raises:
        CheckpointContentError: 체크포인트에 encoder 그룹이 없을 때
    """
    if model is None:
        model, cfg = _load_for_training(cfg, ckpt, "encoder")
    cpb = model.attach_cpb(cfg.seed)
    model.store.freeze_all_except(["cpb"])
    sizes = _log_groups(model)

    def step(i: int) -> Tuple[str, List[int], Tensor]:
        rng = make_rng(cfg.seed, STAGE2_STREAM, i)
        size = int(cfg.stage2_sizes[int(rng.integers(len(cfg.stage2_sizes)))])
        seeds = [derive_seed(cfg.seed, STAGE2_STREAM, i, b) for b in range(cfg.stage2_batch)]
        pairs = warp_batch(seeds, size, cfg.G)
        x_d = to_diffusion_range(np.stack([p.input for p in pairs]))
        bm_gt = np.stack([p.bm_gt.grid for p in pairs])
        return "dewarp", seeds, cpb_loss(cpb(x_d), Tensor(bm_gt))

    result = run_training_loop("stage2", cfg.stage2_iters, cfg, model.store, step)
    result.group_sizes = sizes
    result.report = {"windows": result.windows(cfg.loss_window)}
    write_json(cfg.output_path("stage2_losses.json"), {"losses": result.losses})
    if save:
        result.checkpoint = save_checkpoint(model.store, cfg, cfg.output_path("stage2.uddf"), model.tasks,
                                            stage="stage2")
    logger.info(f"stage2 완료: {result.report['windows']}")
    return result


# ==================== 태스크 확장 ====================

def _reference_outputs(restorer: Restorer, cfg: RunConfig, tasks: List[str]) -> Dict[str, Tuple[np.ndarray, float]]:
    references = {}
    for task in tasks:
        pair = make_pairs(task, [derive_seed(cfg.seed, REFERENCE_STREAM, restorer.model.tasks.get(task).index)],
                          cfg.image_size)[0]
        restored = restorer.restore(pair.input, task, seed=derive_seed(cfg.seed, REFERENCE_STREAM))
        references[task] = (restored, psnr(restored, pair.gt))
    return references


def extend_task(cfg: RunConfig, ckpt: Optional[str] = None, new_task: Optional[str] = None,
                model: Optional[UniDocModel] = None, save: bool = True) -> TrainResult:
    """
    빈 슬롯에 새 태스크를 등록하고 pfm 그룹만 학습

    학습 전후로 기존 태스크의 기준 복원 결과를 비교해 drift(max |Δ|)를
    extend_report.json에 기록합니다.

    Raises:
        TaskError: 빈 슬롯이 없거나 이미 등록된 태스크 / 열화를 만들 수 없는 태스크
    """
    new_task = new_task or cfg.new_task
    if not new_task:
        raise TaskError("추가할 태스크 이름이 필요합니다 (--task)")
    if new_task not in DEGRADATIONS:
        raise TaskError(f"합성 열화가 없는 태스크입니다: {new_task} (가능: {', '.join(DEGRADATIONS)})")
    if model is None:
        model, cfg = _load_for_training(cfg, ckpt, "pfm")
    if new_task in model.tasks:
        raise TaskError(f"이미 등록된 태스크입니다: {new_task} (등록됨: {', '.join(model.tasks.names)})")

    old_tasks = list(model.tasks.names)
    restorer = Restorer.from_model(model, cfg)
    before = _reference_outputs(restorer, cfg, old_tasks)
    vector = model.tasks.register(new_task)
    logger.info(f"태스크 등록: {new_task} → slot {vector.index} (band={vector.band}, 남은 슬롯 {model.tasks.spare_slots})")

    frozen = model.store.freeze_all_except(["pfm"])
    logger.info(f"pfm 외 파라미터 {frozen}개 동결")
    sizes = _log_groups(model)

    step = pixel_step(model, cfg, EXTEND_STREAM, lambda rng: new_task)
    validate = pixel_validator(model, cfg, [new_task])
    result = run_training_loop("extend", cfg.extend_iters, cfg, model.store, step, validate)
    result.group_sizes = sizes

    after = _reference_outputs(restorer, cfg, old_tasks)
    drift = {
        task: {
            "max_abs_diff": float(np.max(np.abs(after[task][0] - before[task][0]))),
            "psnr_before": before[task][1],
            "psnr_after": after[task][1],
        }
        for task in old_tasks
    }
    result.report = {
        "new_task": new_task,
        "slot": vector.index,
        "windows": result.windows(cfg.loss_window),
        "drift": drift,
        "max_drift": max((d["max_abs_diff"] for d in drift.values()), default=0.0),
    }
    write_json(cfg.output_path("extend_report.json"), result.report)
    if save:
        result.checkpoint = save_checkpoint(model.store, cfg, cfg.output_path(f"extend_{new_task}.uddf"),
                                            model.tasks, stage="extend")
    logger.info(f"extend 완료: {new_task} {result.report['windows']} max_drift={result.report['max_drift']:.3e}")
    return result
