"""
Inference - 체크포인트 기반 복원/dewarp

H, W가 16의 배수가 아니면 reflect 패딩 후 원래 크기로 잘라 돌려줍니다.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.errors import CheckpointContentError, ShapeError
from core.imageio import read_image, write_image
from core.utils import crop_to, pad_to_multiple
from diffusion.sampler import sample
from diffusion.schedule import DiffusionSchedule
from models.builder import UniDocModel
from models.cpb import BackwardMap, dewarp
from pipeline.checkpoint import model_from_checkpoint, read_checkpoint
from pipeline.config import RunConfig
from priors.pool import PriorSettings, build_prior_batch

logger = logging.getLogger(__name__)

SIZE_MULTIPLE = 16


@dataclass
class Restorer:
    """체크포인트에서 복원한 모델과 추론 설정"""

    model: UniDocModel
    cfg: RunConfig
    sched: DiffusionSchedule
    settings: PriorSettings

    @classmethod
    def from_checkpoint(cls, path: str) -> "Restorer":
        data = read_checkpoint(path)
        cfg = data.run_config
        model = model_from_checkpoint(data)
        logger.info(f"체크포인트 로드: {path} (stage={data.stage or '?'}, tasks={model.tasks.names})")
        return cls(model=model, cfg=cfg, sched=cfg.schedule(), settings=cfg.prior_settings())

    @classmethod
    def from_model(cls, model: UniDocModel, cfg: RunConfig) -> "Restorer":
        return cls(model=model, cfg=cfg, sched=cfg.schedule(), settings=cfg.prior_settings())

    def restore(self, image: np.ndarray, task: str, steps: Optional[int] = None, seed: int = 0) -> np.ndarray:
        """(3, H, W) → (3, H, W) [0, 1]"""
        return self.restore_batch(np.asarray(image)[None], task, steps, seed)[0]

    def restore_batch(self, images: np.ndarray, task: str, steps: Optional[int] = None,
                      seed: int = 0) -> np.ndarray:
        """
        같은 태스크의 이미지 묶음 복원

        Args:
            images: (B, 3, H, W) [0, 1]
            task: 등록된 태스크 이름
            steps: 추론 단계 수 (기본: cfg.steps)
            seed: x_T 초기화 시드

        Raises:
            TaskError: 등록되지 않은 태스크 (등록된 목록 포함)
        """
        vector = self.model.tasks.get(task)
        images = np.asarray(images, dtype=np.float32)
        if images.ndim != 4 or images.shape[1] != 3:
            raise ShapeError(f"restore: (B, 3, H, W) 이미지가 필요합니다 (shape={images.shape})")
        padded, size = _pad_batch(images)
        prior = None
        if self.cfg.uses_prior_pool:
            prior = build_prior_batch(padded, self.settings)
        out = sample(padded, vector, prior, steps or self.cfg.steps, self.model.denoiser.predict,
                     self.sched, seed)
        return np.ascontiguousarray(out[..., :size[0], :size[1]])

    def dewarp(self, image: np.ndarray) -> Tuple[np.ndarray, BackwardMap]:
        """
        (3, H, W) 왜곡 이미지 → (평탄화 이미지, BackwardMap)

        Raises:
            CheckpointContentError: CPB 그룹이 없는 체크포인트
        """
        if self.model.cpb is None:
            raise CheckpointContentError("체크포인트에 cpb 파라미터 그룹이 없습니다 (train-stage2 필요)")
        padded, size = pad_to_multiple(np.asarray(image, dtype=np.float32), SIZE_MULTIPLE)
        bm = self.model.cpb.predict(padded)
        return crop_to(dewarp(padded, bm), size), bm


def _pad_batch(images: np.ndarray) -> Tuple[np.ndarray, Tuple[int, int]]:
    padded = [pad_to_multiple(img, SIZE_MULTIPLE) for img in images]
    return np.stack([p for p, _ in padded]), padded[0][1]


def restore_file(ckpt: str, image_path: str, task: str, out_path: str, steps: Optional[int] = None,
                 seed: int = 0) -> np.ndarray:
    """restore 명령: 이미지 파일 → 복원 이미지 파일"""
    restorer = Restorer.from_checkpoint(ckpt)
    image = read_image(image_path)
    restored = restorer.restore(image, task, steps, seed)
    write_image(out_path, restored)
    logger.info(f"복원 저장: {out_path} (task={task}, {image.shape[2]}x{image.shape[1]})")
    return restored


def dewarp_file(ckpt: str, image_path: str, out_path: str, dump_bm: Optional[str] = None) -> np.ndarray:
    """dewarp 명령: 왜곡 이미지 파일 → 평탄화 이미지 파일 (선택적으로 UDBM 저장)"""
    restorer = Restorer.from_checkpoint(ckpt)
    flat, bm = restorer.dewarp(read_image(image_path))
    write_image(out_path, flat)
    if dump_bm:
        bm.dump(dump_bm)
        logger.info(f"backward map 저장: {dump_bm} (G={bm.G})")
    return flat
