"""
Ablation - 같은 시드로 변형 모델을 학습해 비교 리포트 작성

ablate:        full 모델 vs no-prior-pool / no-pfm / no-freq-loss (Stage 1)
interference:  deblur 단독 vs deblur+deshadow, Prior Pool 유무별 deblur 손실 곡선
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from core.errors import ConfigError
from core.utils import write_json
from models.denoiser import VARIANTS
from pipeline.config import RunConfig
from pipeline.training import TrainResult, train_stage1

logger = logging.getLogger(__name__)

DEFAULT_ABLATIONS = ["no-prior-pool", "no-pfm"]


def _variant_config(cfg: RunConfig, variant: str, subdir: str, **updates) -> RunConfig:
    return cfg.model_copy(update={"variant": variant, "out_dir": cfg.output_path(subdir), **updates})


def _per_task_summary(result: TrainResult, tasks: List[str], window: int) -> Dict[str, Dict]:
    """태스크별 마지막 window 반복 평균 손실 + 마지막 검증 PSNR"""
    tail_losses = result.losses[-window:]
    tail_tasks = result.tasks[-window:]
    last_val = result.validation[-1] if result.validation else {}
    summary = {}
    for task in tasks:
        values = [loss for loss, name in zip(tail_losses, tail_tasks) if name == task]
        summary[task] = {
            "final_loss": float(np.mean(values)) if values else None,
            "val_psnr": last_val.get(task),
        }
    return summary


def ablate(cfg: RunConfig, variants: Optional[List[str]] = None) -> Dict:
    """
    full 모델과 각 변형을 동일한 시드/데이터로 Stage 1 학습

    Returns:
        ablation_report.json 내용 {variants: {name: {tasks, windows, params}}}
    """
    variants = variants or DEFAULT_ABLATIONS
    unknown = [v for v in variants if v not in VARIANTS or v == "none"]
    if unknown:
        raise ConfigError(f"알 수 없는 ablation 변형: {unknown} (가능: {', '.join(VARIANTS[1:])})")

    report: Dict = {"seed": cfg.seed, "iters": cfg.stage1_iters, "tasks": cfg.tasks, "variants": {}}
    for variant in ["none"] + list(variants):
        name = "full" if variant == "none" else variant
        logger.info(f"ablation 학습: {name}")
        result = train_stage1(_variant_config(cfg, variant, f"ablation_{name}"), save=False)
        report["variants"][name] = {
            "tasks": _per_task_summary(result, cfg.tasks, cfg.loss_window),
            "windows": result.windows(cfg.loss_window),
            "params": result.group_sizes,
        }
    write_json(cfg.output_path("ablation_report.json"), report)
    return report


INTERFERENCE_SETUPS = {
    "deblur_only": ["deblur"],
    "deblur_deshadow": ["deblur", "deshadow"],
}


def interference(cfg: RunConfig) -> Dict:
    """
    태스크 간 간섭 측정: 태스크 구성 × Prior Pool 유무 4회 학습

    Returns:
        interference_report.json 내용 (deblur 손실 곡선 포함)
    """
    report: Dict = {"seed": cfg.seed, "iters": cfg.stage1_iters, "runs": {}}
    for setup, tasks in INTERFERENCE_SETUPS.items():
        for variant in ("none", "no-prior-pool"):
            name = f"{setup}/{'prior_pool' if variant == 'none' else 'no_prior_pool'}"
            logger.info(f"interference 학습: {name}")
            run_cfg = _variant_config(cfg, variant, f"interference_{name.replace('/', '_')}", tasks=tasks)
            result = train_stage1(run_cfg, save=False)
            curve = result.task_losses("deblur")
            report["runs"][name] = {
                "tasks": tasks,
                "deblur_losses": curve,
                "deblur_final": float(np.mean(curve[-cfg.loss_window:])) if curve else None,
            }
    write_json(cfg.output_path("interference_report.json"), report)
    return report
