"""
Evaluate - 합성 held-out 쌍에 대한 지표 계산

샘플마다 JSON 한 줄 {task, index, psnr, ssim, msssim, fm, pfm}, 태스크 평균 한 줄,
마지막에 aggregate 한 줄을 냅니다. 해당 없는 지표는 null입니다.
"""
import logging
from typing import Dict, Iterator, List, Optional

import numpy as np

from core.utils import derive_seed, dumps_json
from evaluation.binarization import PFM_VARIANT, binarize_output, f_measures
from evaluation.metrics import msssim, psnr, ssim
from pipeline.inference import Restorer
from synth.dataset import make_pairs
from synth.warps import warp_batch

logger = logging.getLogger(__name__)

EVAL_STREAM = 31
METRIC_KEYS = ("psnr", "ssim", "msssim", "fm", "pfm")


def _mean(values: List[Optional[float]]) -> Optional[float]:
    kept = [v for v in values if v is not None]
    return float(np.mean(kept)) if kept else None


def sample_rows(restorer: Restorer, task: str, count: int, size: int, seed: int) -> List[Dict]:
    """
    한 태스크의 held-out 쌍을 복원하고 샘플별 지표 계산

    Args:
        restorer: 체크포인트 모델
        task: 픽셀 태스크 또는 dewarp
        count: 쌍 개수
        size: 정사각 크기 (16의 배수가 아니면 pad/crop)
        seed: 평가 시드 (학습 스트림과 분리된 하위 시드 사용)

    Returns:
        샘플별 지표 dict 목록 {task, index, psnr, ...}
    """
    seeds = [derive_seed(seed, EVAL_STREAM, k) for k in range(count)]
    rows: List[Dict] = []
    if task == "dewarp":
        for pair in warp_batch(seeds, size, restorer.cfg.G):
            flat, _ = restorer.dewarp(pair.input)
            rows.append(_image_metrics(flat, pair.gt, pair.input))
    else:
        pairs = make_pairs(task, seeds, size)
        restored = restorer.restore_batch(np.stack([p.input for p in pairs]), task,
                                          seed=derive_seed(seed, EVAL_STREAM))
        for out, pair in zip(restored, pairs):
            row = _image_metrics(out, pair.gt, pair.input)
            if task == "binarize":
                result = f_measures(binarize_output(out), binarize_output(pair.gt))
                row["fm"], row["pfm"] = result.fm, result.pfm
            rows.append(row)
    return [{"task": task, "index": index, **row} for index, row in enumerate(rows)]


def summarize(task: str, rows: List[Dict]) -> Dict:
    """샘플 지표 → 태스크 평균 record"""
    record: Dict = {"task": task, "count": len(rows)}
    for key in METRIC_KEYS + ("psnr_input", "msssim_input"):
        record[key] = _mean([row.get(key) for row in rows])
    if task == "binarize":
        record["pfm_variant"] = PFM_VARIANT
    logger.info(f"eval task={task} psnr={record['psnr']:.2f} (input {record['psnr_input']:.2f})")
    return record


def _image_metrics(out: np.ndarray, gt: np.ndarray, degraded: np.ndarray) -> Dict[str, Optional[float]]:
    return {
        "psnr": psnr(out, gt),
        "ssim": ssim(out, gt),
        "msssim": msssim(out, gt),
        "fm": None,
        "pfm": None,
        "psnr_input": psnr(degraded, gt),
        "msssim_input": msssim(degraded, gt),
    }


def aggregate(records: List[Dict]) -> Dict:
    out: Dict = {"task": "aggregate", "tasks": [r["task"] for r in records]}
    for key in METRIC_KEYS:
        out[key] = _mean([r.get(key) for r in records])
    return out


def evaluate(ckpt: str, tasks: Optional[List[str]] = None, count: int = 8, size: Optional[int] = None,
             seed: Optional[int] = None, per_sample: bool = False) -> List[Dict]:
    """
    체크포인트 평가

    Args:
        ckpt: UDDF 경로
        tasks: 평가할 태스크 (기본: 등록된 모든 태스크, CPB가 있으면 dewarp 포함)
        count: 태스크별 쌍 개수
        size: 이미지 크기 (기본: 체크포인트 image_size)
        seed: 평가 시드 (기본: 체크포인트 seed)
        per_sample: True면 태스크 record 앞에 샘플별 record를 포함

    Returns:
        (샘플 record +) 태스크별 record 목록 + aggregate record
    """
    restorer = Restorer.from_checkpoint(ckpt)
    cfg = restorer.cfg
    if not tasks:
        tasks = restorer.model.tasks.names + (["dewarp"] if restorer.model.cpb is not None else [])
    size = size or cfg.image_size
    seed = cfg.seed if seed is None else seed

    lines: List[Dict] = []
    summaries: List[Dict] = []
    for task in tasks:
        rows = sample_rows(restorer, task, count, size, seed)
        if per_sample:
            lines.extend(rows)
        summary = summarize(task, rows)
        lines.append(summary)
        summaries.append(summary)
    return lines + [aggregate(summaries)]


def json_lines(records: List[Dict]) -> Iterator[str]:
    for record in records:
        yield dumps_json(record)
