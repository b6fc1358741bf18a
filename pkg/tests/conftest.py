"""
공용 fixture

학습이 들어가는 테스트는 채널 수와 반복 횟수를 최소로 줄인 tiny 설정을 씁니다.
2000회 기준 실행 같은 긴 테스트는 @pytest.mark.slow로 표시하고 --runslow일 때만 돌립니다.
"""
from typing import Any, Dict

import numpy as np
import pytest

from core.utils import make_rng
from models.denoiser import DenoiserConfig
from pipeline.config import RunConfig
from pipeline.training import train_stage1, train_stage2
from synth.documents import gen_clean_doc

TINY_RUN: Dict[str, Any] = {
    "seed": 0,
    "image_size": 32,
    "batch_size": 1,
    "tasks": ["deblur", "deshadow"],
    "new_task": "denoise",
    "stage1_iters": 1,
    "stage2_iters": 1,
    "extend_iters": 1,
    "stage2_sizes": [32],
    "stage2_batch": 1,
    "T_max": 10,
    "steps": 2,
    "stage_channels": [2, 3, 4, 4],
    "task_slots": 4,
    "time_dim": 4,
    "pfm_hidden": 3,
    "G": 4,
    "cpb_branch_channels": 2,
    "log_every": 1,
    "val_every": 1000,
    "val_samples": 1,
    "loss_window": 10,
    "quiet": True,
}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="slow 표시 테스트도 실행")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 기준 학습 실행 등 긴 테스트 (--runslow 필요)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="--runslow 옵션이 필요합니다")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234)


@pytest.fixture(scope="session")
def make_tiny_config():
    """out_dir와 덮어쓸 필드를 받아 tiny RunConfig 생성"""

    def make(out_dir, **updates) -> RunConfig:
        return RunConfig(**{**TINY_RUN, "out_dir": str(out_dir), **updates})

    return make


@pytest.fixture
def tiny_config(make_tiny_config, tmp_path) -> RunConfig:
    return make_tiny_config(tmp_path / "run")


@pytest.fixture
def tiny_denoiser_config() -> DenoiserConfig:
    return DenoiserConfig(stage_channels=[2, 3, 4, 4], task_slots=3, time_dim=4, pfm_hidden=3,
                          cpb_grid=4, cpb_branch_channels=2)


@pytest.fixture(scope="session")
def trained_checkpoints(make_tiny_config, tmp_path_factory) -> Dict[str, str]:
    """tiny 설정으로 Stage 1 → Stage 2 한 번 학습한 체크포인트 경로 (세션 공유, 읽기 전용)"""
    cfg = make_tiny_config(tmp_path_factory.mktemp("trained"))
    stage1 = train_stage1(cfg)
    stage2 = train_stage2(cfg, stage1.checkpoint)
    return {"stage1": stage1.checkpoint, "stage2": stage2.checkpoint, "out_dir": cfg.out_dir}


@pytest.fixture
def page() -> np.ndarray:
    return gen_clean_doc(7, 32, 32)
