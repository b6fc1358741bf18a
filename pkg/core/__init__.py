"""핵심 인프라 모듈"""
from core.config import CHECKPOINT_PATH, HOST, LOG_LEVEL, OUTPUT_DIR, PORT, setup_logging
from core.errors import (
    CheckpointCRCError,
    CheckpointContentError,
    CheckpointError,
    CheckpointMagicError,
    CheckpointVersionError,
    ConfigError,
    GradcheckError,
    ImageFormatError,
    ShapeError,
    SynthesisError,
    TaskError,
    TrainingDivergedError,
    UniDocError,
)

__all__ = [
    "CHECKPOINT_PATH",
    "HOST",
    "LOG_LEVEL",
    "OUTPUT_DIR",
    "PORT",
    "setup_logging",
    "UniDocError",
    "ShapeError",
    "ConfigError",
    "TaskError",
    "CheckpointError",
    "CheckpointMagicError",
    "CheckpointVersionError",
    "CheckpointCRCError",
    "CheckpointContentError",
    "TrainingDivergedError",
    "GradcheckError",
    "ImageFormatError",
    "SynthesisError",
]
