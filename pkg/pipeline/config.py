"""
Run Config - 학습/추론 실행 설정

우선순위: 기본값 < --config JSON < CLI 플래그
체크포인트에는 이 모델이 그대로 직렬화됩니다.
"""
import logging
import os
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from core.config import OUTPUT_DIR
from core.errors import ConfigError
from core.utils import read_json
from diffusion.schedule import DiffusionSchedule, make_schedule
from evaluation.losses import LossWeights
from models.denoiser import VARIANTS, DenoiserConfig
from models.tasks import DEFAULT_TASKS, KNOWN_BANDS
from priors.pool import PriorSettings

logger = logging.getLogger(__name__)

# 체크포인트 재사용 시 바뀌면 안 되는 네트워크 구조 필드
ARCHITECTURE_FIELDS = [
    "stage_channels",
    "task_slots",
    "time_dim",
    "pfm_hidden",
    "G",
    "cpb_branch_channels",
    "cpb_noise_fill",
    "variant",
]


class RunConfig(BaseModel):
    """실행 설정 (데스크 규모 기본값)"""
    # 재현성
    seed: int = 0

    # 데이터
    image_size: int = 32
    batch_size: int = 8
    tasks: List[str] = list(DEFAULT_TASKS)
    new_task: Optional[str] = "denoise"

    # 반복 횟수
    stage1_iters: int = 2000
    stage2_iters: int = 1000
    extend_iters: int = 500
    stage2_sizes: List[int] = [64, 96, 128]
    stage2_batch: int = 4

    # 최적화
    lr: float = 1e-3
    weight_decay: float = 5e-4
    beta1: float = 1.0
    beta2: float = 0.1
    freq_sigma: float = 2.0

    # 확산
    T_max: int = 100
    beta_start: float = 1e-4
    beta_end: float = 0.02
    steps: int = 10

    # 네트워크
    stage_channels: List[int] = [16, 32, 64, 96]
    task_slots: int = 8
    time_dim: int = 64
    pfm_hidden: int = 32
    G: int = 16
    cpb_branch_channels: int = 32
    cpb_noise_fill: str = "zeros"
    variant: str = "none"

    # Prior Pool
    canny_low: float = 0.1
    canny_high: float = 0.3
    median_k: int = 5
    gaussian_sigma: float = 4.0
    dct_keep_frac: float = 0.1

    # 로깅/검증
    log_every: int = 50
    val_every: int = 500
    val_samples: int = 4
    loss_window: int = 100

    # 경로
    out_dir: str = OUTPUT_DIR
    checkpoint: Optional[str] = None
    quiet: bool = False

    @field_validator("image_size")
    @classmethod
    def _size_multiple_of_16(cls, value: int) -> int:
        if value < 32 or value % 16:
            raise ValueError(f"image_size는 32 이상의 16의 배수여야 합니다: {value}")
        return value

    @field_validator("stage2_sizes")
    @classmethod
    def _stage2_sizes(cls, value: List[int]) -> List[int]:
        if not value or any(s < 32 or s % 16 for s in value):
            raise ValueError(f"stage2_sizes는 32 이상의 16의 배수 목록이어야 합니다: {value}")
        return value

    @field_validator("batch_size", "stage2_batch", "task_slots", "log_every", "val_every",
                     "val_samples", "loss_window", "T_max", "steps")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"1 이상이어야 합니다: {value}")
        return value

    @field_validator("stage1_iters", "stage2_iters", "extend_iters")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"반복 횟수는 0 이상이어야 합니다: {value}")
        return value

    @field_validator("lr", "freq_sigma", "gaussian_sigma")
    @classmethod
    def _strictly_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"양수여야 합니다: {value}")
        return value

    @field_validator("weight_decay", "beta1", "beta2")
    @classmethod
    def _non_negative_weight(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"0 이상이어야 합니다: {value}")
        return value

    @field_validator("tasks")
    @classmethod
    def _known_tasks(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("tasks는 비어 있을 수 없습니다")
        if len(set(value)) != len(value):
            raise ValueError(f"tasks에 중복이 있습니다: {value}")
        unknown = [t for t in value if t not in KNOWN_BANDS]
        if unknown:
            raise ValueError(f"픽셀 태스크가 아닙니다: {unknown} (가능: {', '.join(KNOWN_BANDS)})")
        return value

    @field_validator("variant")
    @classmethod
    def _variant(cls, value: str) -> str:
        if value not in VARIANTS:
            raise ValueError(f"알 수 없는 ablation 변형: {value} (가능: {', '.join(VARIANTS)})")
        return value

    @model_validator(mode="after")
    def _cross_field(self) -> "RunConfig":
        if len(self.tasks) > self.task_slots:
            raise ValueError(f"태스크 {len(self.tasks)}개가 task_slots={self.task_slots}보다 많습니다")
        if self.steps > self.T_max:
            raise ValueError(f"steps({self.steps})는 T_max({self.T_max}) 이하여야 합니다")
        if not 0.0 < self.beta_start <= self.beta_end < 1.0:
            raise ValueError(f"0 < beta_start ≤ beta_end < 1 이어야 합니다 ({self.beta_start}, {self.beta_end})")
        if not 0.0 <= self.canny_low < self.canny_high:
            raise ValueError(f"0 ≤ canny_low < canny_high 이어야 합니다 ({self.canny_low}, {self.canny_high})")
        if self.G < 2:
            raise ValueError(f"G는 2 이상이어야 합니다: {self.G}")
        if self.median_k < 3 or self.median_k % 2 == 0:
            raise ValueError(f"median_k는 3 이상의 홀수여야 합니다: {self.median_k}")
        if not 0.0 < self.dct_keep_frac <= 1.0:
            raise ValueError(f"dct_keep_frac은 (0, 1] 범위여야 합니다: {self.dct_keep_frac}")
        try:
            self.denoiser_config()
        except ValidationError as e:
            raise ValueError("; ".join(err["msg"] for err in e.errors())) from None
        return self

    # ==================== 파생 설정 ====================

    def denoiser_config(self) -> DenoiserConfig:
        return DenoiserConfig(
            stage_channels=self.stage_channels,
            task_slots=self.task_slots,
            time_dim=self.time_dim,
            pfm_hidden=self.pfm_hidden,
            cpb_grid=self.G,
            cpb_branch_channels=self.cpb_branch_channels,
            cpb_noise_fill=self.cpb_noise_fill,
            variant=self.variant,
        )

    def schedule(self) -> DiffusionSchedule:
        return make_schedule(self.T_max, self.beta_start, self.beta_end)

    def prior_settings(self) -> PriorSettings:
        return PriorSettings(
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            median_k=self.median_k,
            gaussian_sigma=self.gaussian_sigma,
            dct_keep_frac=self.dct_keep_frac,
        )

    def loss_weights(self) -> LossWeights:
        return LossWeights(beta1=self.beta1, beta2=self.beta2)

    @property
    def use_freq_loss(self) -> bool:
        return self.variant != "no-freq-loss"

    @property
    def uses_prior_pool(self) -> bool:
        """no-prior-pool은 학습 상수, no-pfm은 prior 없이 태스크별 conv"""
        return self.variant not in ("no-prior-pool", "no-pfm")

    def output_path(self, *parts: str) -> str:
        return os.path.join(self.out_dir, *parts)


def validate_run_config(data: Dict[str, Any]) -> RunConfig:
    """dict → RunConfig, 검증 실패는 ConfigError"""
    try:
        return RunConfig(**data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"잘못된 설정: {problems}") from None


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    기본값 < JSON 파일 < overrides 순으로 병합

    Args:
        path: --config JSON 파일 경로
        overrides: CLI 플래그 값 (None 값은 무시)

    Returns:
        검증된 RunConfig
    """
    data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"설정 파일이 없습니다: {path}")
        try:
            loaded = read_json(path)
        except ValueError as e:
            raise ConfigError(f"설정 파일 JSON 파싱 실패: {path} ({e})") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"설정 파일 최상위는 객체여야 합니다: {path}")
        data.update(loaded)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = validate_run_config(data)
    logger.debug(f"RunConfig: seed={cfg.seed} size={cfg.image_size} tasks={cfg.tasks}")
    return cfg


def merge_architecture(cfg: RunConfig, stored: RunConfig) -> RunConfig:
    """체크포인트의 구조 필드를 현재 설정에 덮어쓰기 (나머지는 현재 값 유지)"""
    changed = {name: getattr(stored, name) for name in ARCHITECTURE_FIELDS
               if getattr(cfg, name) != getattr(stored, name)}
    if changed:
        logger.info(f"체크포인트 구조 설정 사용: {sorted(changed)}")
    return cfg.model_copy(update=changed)
