"""학습/추론 파이프라인과 run-all 그래프"""
from pipeline.ablation import ablate, interference
from pipeline.checkpoint import (
    CheckpointData,
    load_checkpoint,
    model_from_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from pipeline.config import RunConfig, load_run_config
from pipeline.evaluate import evaluate
from pipeline.graph import create_pipeline_graph, run_pipeline
from pipeline.gradcheck_suite import run_suite
from pipeline.inference import Restorer, dewarp_file, restore_file
from pipeline.training import TrainResult, extend_task, train_stage1, train_stage2

__all__ = [
    "ablate",
    "interference",
    "CheckpointData",
    "load_checkpoint",
    "model_from_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "RunConfig",
    "load_run_config",
    "evaluate",
    "create_pipeline_graph",
    "run_pipeline",
    "run_suite",
    "Restorer",
    "dewarp_file",
    "restore_file",
    "TrainResult",
    "extend_task",
    "train_stage1",
    "train_stage2",
]
