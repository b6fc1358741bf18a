"""네트워크: 조건부 U-Net denoiser(PFM 포함)와 좌표 예측 분기(CPB)"""
from models.builder import UniDocModel, build_model
from models.cpb import BackwardMap, CoordinateBranch, cpb_fuse, dewarp
from models.denoiser import DenoiserConfig, EncoderFeatures, UniDocDenoiser
from models.tasks import DEFAULT_TASKS, TaskRegistry, TaskVector

__all__ = [
    "UniDocModel",
    "build_model",
    "BackwardMap",
    "CoordinateBranch",
    "cpb_fuse",
    "dewarp",
    "DenoiserConfig",
    "EncoderFeatures",
    "UniDocDenoiser",
    "DEFAULT_TASKS",
    "TaskRegistry",
    "TaskVector",
]
