"""
Pipeline Nodes - run-all 그래프 노드

각 노드는 RunConfig를 상태에서 복원하고, 학습 결과 체크포인트 경로와
리포트만 상태에 기록합니다.
"""
import logging
import os
from typing import Dict, Optional

from core.errors import CheckpointContentError
from core.utils import write_json
from pipeline.config import RunConfig, validate_run_config
from pipeline.evaluate import evaluate, json_lines
from pipeline.state import PipelineState
from pipeline.training import extend_task, train_stage1, train_stage2

logger = logging.getLogger(__name__)


def _config(state: PipelineState) -> RunConfig:
    return validate_run_config(state["run_config"])


def _latest_checkpoint(state: PipelineState) -> Optional[str]:
    for key in ("extend_checkpoint", "stage2_checkpoint", "stage1_checkpoint"):
        if state.get(key):
            return state[key]
    return None


def prepare_node(state: PipelineState) -> Dict:
    """설정 저장, Stage 1을 건너뛰는 경우 시작 체크포인트 확인"""
    logger.info("[Node] prepare 실행")
    cfg = _config(state)
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_json(cfg.output_path("run_config.json"), cfg.model_dump(mode="json"))
    updates: Dict = {"completed": state.get("completed", []) + ["prepare"]}
    if cfg.stage1_iters == 0:
        if not cfg.checkpoint:
            raise CheckpointContentError("stage1_iters=0이면 시작 체크포인트(--checkpoint)가 필요합니다")
        updates["stage1_checkpoint"] = cfg.checkpoint
    return updates


def stage1_node(state: PipelineState) -> Dict:
    logger.info("[Node] stage1 실행")
    result = train_stage1(_config(state))
    return {
        "stage1_checkpoint": result.checkpoint,
        "reports": {**state.get("reports", {}), "stage1": result.report},
        "completed": state.get("completed", []) + ["stage1"],
    }


def stage2_node(state: PipelineState) -> Dict:
    logger.info("[Node] stage2 실행")
    result = train_stage2(_config(state), state.get("stage1_checkpoint"))
    return {
        "stage2_checkpoint": result.checkpoint,
        "reports": {**state.get("reports", {}), "stage2": result.report},
        "completed": state.get("completed", []) + ["stage2"],
    }


def extend_node(state: PipelineState) -> Dict:
    logger.info("[Node] extend 실행")
    source = state.get("stage2_checkpoint") or state.get("stage1_checkpoint")
    result = extend_task(_config(state), source)
    return {
        "extend_checkpoint": result.checkpoint,
        "reports": {**state.get("reports", {}), "extend": result.report},
        "completed": state.get("completed", []) + ["extend"],
    }


def eval_node(state: PipelineState) -> Dict:
    """가장 마지막 체크포인트를 평가하고 eval.jsonl 저장"""
    logger.info("[Node] eval 실행")
    cfg = _config(state)
    ckpt = _latest_checkpoint(state)
    if not ckpt:
        raise CheckpointContentError("평가할 체크포인트가 없습니다")
    records = evaluate(ckpt, count=cfg.val_samples, per_sample=True)
    with open(cfg.output_path("eval.jsonl"), "w", encoding="utf-8") as f:
        for line in json_lines(records):
            f.write(line + "\n")
    return {"eval_records": records, "completed": state.get("completed", []) + ["eval"]}
