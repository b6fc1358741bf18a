"""
Model Builder - 설정과 시드로 모델/파라미터 저장소 생성
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

from autograd.params import ParamStore
from core.utils import make_rng
from models.cpb import CoordinateBranch
from models.denoiser import DenoiserConfig, UniDocDenoiser
from models.tasks import TaskRegistry

logger = logging.getLogger(__name__)

# 그룹별 독립 초기화 스트림 (CPB 추가가 denoiser 초기값을 바꾸지 않도록)
_DENOISER_STREAM = 1
_CPB_STREAM = 2


@dataclass
class UniDocModel:
    """파라미터 저장소 + denoiser(PPB) + 선택적 CPB + 태스크 레지스트리"""

    store: ParamStore
    config: DenoiserConfig
    denoiser: UniDocDenoiser
    tasks: TaskRegistry
    cpb: Optional[CoordinateBranch] = None

    def group_sizes(self) -> Dict[str, int]:
        return self.store.group_sizes()

    def attach_cpb(self, seed: int) -> CoordinateBranch:
        """CPB 파라미터 등록 (이미 있으면 그대로 반환)"""
        if self.cpb is None:
            self.cpb = CoordinateBranch(self.store, self.config, self.denoiser, make_rng(seed, _CPB_STREAM))
        return self.cpb


def build_model(config: DenoiserConfig, seed: int, tasks: Optional[TaskRegistry] = None,
                with_cpb: bool = False) -> UniDocModel:
    """
    모델 생성 (같은 config + seed → 비트 단위로 같은 초기값)

    Args:
        config: 네트워크 구조
        seed: 초기화 시드
        tasks: 태스크 레지스트리 (기본: 5개 픽셀 태스크)
        with_cpb: CPB 파라미터까지 등록할지 여부
    """
    store = ParamStore()
    denoiser = UniDocDenoiser(store, config, make_rng(seed, _DENOISER_STREAM))
    tasks = tasks or TaskRegistry(slots=config.task_slots)
    model = UniDocModel(store=store, config=config, denoiser=denoiser, tasks=tasks)
    if with_cpb:
        model.attach_cpb(seed)
    logger.debug(f"모델 생성: {model.group_sizes()}")
    return model
