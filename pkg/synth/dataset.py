"""
Synthetic Dataset - 시드 기반 쌍 생성과 디스크 레이아웃

    <outdir>/<task>/<index>_in.ppm, <index>_gt.ppm, (dewarp) <index>_bm.bin
    <outdir>/<task>/manifest.json  {task, seed, count, size}
"""
import logging
import os
from typing import Dict, List

from tqdm import tqdm

from core.imageio import write_image
from core.utils import derive_seed, write_json
from synth.degradations import DEGRADATIONS, SamplePair, degrade
from synth.documents import gen_clean_doc
from synth.warps import gen_warp_pair

logger = logging.getLogger(__name__)

SYNTH_TASKS = list(DEGRADATIONS) + ["dewarp"]


def pair_seed(seed: int, index: int) -> int:
    return derive_seed(seed, index)


def make_pair(task: str, seed: int, size: int, G: int = 16) -> SamplePair:
    """(task, seed, size) → SamplePair (순수 함수)"""
    if task == "dewarp":
        return gen_warp_pair(seed, size, size, G)
    clean = gen_clean_doc(derive_seed(seed, 0), size, size)
    return degrade(task, clean, derive_seed(seed, 1))


def make_pairs(task: str, seeds: List[int], size: int, G: int = 16) -> List[SamplePair]:
    return [make_pair(task, s, size, G) for s in seeds]


def write_dataset(outdir: str, task: str, count: int, size: int, seed: int, G: int = 16,
                  progress: bool = True) -> Dict:
    """
    합성 쌍을 파일로 저장

    Args:
        outdir: 출력 루트
        task: 픽셀 태스크 또는 dewarp
        count: 쌍 개수
        size: 정사각 크기
        seed: 데이터셋 시드 (index별 하위 시드 유도)

    Returns:
        manifest dict
    """
    task_dir = os.path.join(outdir, task)
    os.makedirs(task_dir, exist_ok=True)
    for index in tqdm(range(count), desc=f"synth {task}", disable=not progress, leave=False):
        pair = make_pair(task, pair_seed(seed, index), size, G)
        stem = os.path.join(task_dir, f"{index:04d}")
        write_image(f"{stem}_in.ppm", pair.input)
        write_image(f"{stem}_gt.ppm", pair.gt)
        if pair.bm_gt is not None:
            pair.bm_gt.dump(f"{stem}_bm.bin")

    manifest = {"task": task, "seed": int(seed), "count": int(count), "size": int(size)}
    write_json(os.path.join(task_dir, "manifest.json"), manifest)
    logger.info(f"합성 데이터 저장: {task_dir} ({count}쌍, {size}px)")
    return manifest
