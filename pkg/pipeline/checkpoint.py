"""
Checkpoint - UDDF 바이너리 체크포인트

    magic "UDDF" | u32 version | u32 json_len | JSON (UTF-8, 키 정렬)
    | u32 count | count × {u16 name_len | name | u8 dtype | u8 rank | rank × u32 dim | LE raw}
    | u32 CRC32 (앞의 모든 바이트)

dtype: 0 = float32, 1 = float64. 모든 정수는 little-endian입니다.
JSON에는 run_config, tasks(레지스트리), stage, extra 메타데이터가 들어갑니다.
"""
import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from autograd.params import ParamStore
from autograd.tensor import Tensor
from core.errors import (
    CheckpointCRCError,
    CheckpointContentError,
    CheckpointError,
    CheckpointMagicError,
    CheckpointVersionError,
    ConfigError,
)
from core.utils import dumps_json
from models.builder import UniDocModel, build_model
from models.tasks import TaskRegistry
from pipeline.config import RunConfig, validate_run_config

logger = logging.getLogger(__name__)

MAGIC = b"UDDF"
VERSION = 1

DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


@dataclass
class CheckpointData:
    """디코딩된 체크포인트 내용"""

    arrays: Dict[str, np.ndarray]
    run_config: RunConfig
    tasks: TaskRegistry
    stage: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    def has_group(self, group: str) -> bool:
        return any(name.split(".", 1)[0] == group for name in self.arrays)

    def group_arrays(self, group: str) -> Dict[str, np.ndarray]:
        return {n: a for n, a in self.arrays.items() if n.split(".", 1)[0] == group}


# ==================== 인코딩 ====================

def encode_checkpoint(arrays: Dict[str, np.ndarray], header: Dict[str, Any]) -> bytes:
    """(이름 → 배열), 헤더 dict → UDDF 바이트 (이름 사전순)"""
    meta = dumps_json(header).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta, struct.pack("<I", len(arrays))]
    for name in sorted(arrays):
        array = np.asarray(arrays[name])
        if array.dtype not in DTYPE_CODES:
            raise CheckpointError(f"지원하지 않는 dtype: {name} ({array.dtype})")
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<BB", DTYPE_CODES[array.dtype], array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=array.dtype.newbyteorder("<")).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def decode_checkpoint(raw: bytes) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    UDDF 바이트 → (arrays, header)

    검사 순서: magic → CRC → version. 잘린 파일은 CRC 오류가 되며
    부분 상태는 반환하지 않습니다.
    """
    if raw[:4] != MAGIC:
        raise CheckpointMagicError(f"UDDF 체크포인트가 아닙니다 (magic={raw[:4]!r})")
    if len(raw) < 16:
        raise CheckpointCRCError(f"체크포인트가 너무 짧습니다 ({len(raw)} bytes)")
    body, (stored_crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    actual_crc = zlib.crc32(body) & 0xFFFFFFFF
    if actual_crc != stored_crc:
        raise CheckpointCRCError(f"CRC32 불일치: 저장값 {stored_crc:08x}, 계산값 {actual_crc:08x}")
    version, meta_len = struct.unpack_from("<II", body, 4)
    if version != VERSION:
        raise CheckpointVersionError(f"지원하지 않는 체크포인트 버전: {version} (지원: {VERSION})")

    try:
        offset = 12
        header = json.loads(body[offset:offset + meta_len].decode("utf-8"))
        offset += meta_len
        (count,) = struct.unpack_from("<I", body, offset)
        offset += 4
        arrays: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset:offset + name_len].decode("utf-8")
            offset += name_len
            code, rank = struct.unpack_from("<BB", body, offset)
            offset += 2
            shape = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            dtype = CODE_DTYPES[code]
            nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            if offset + nbytes > len(body):
                raise ValueError(f"텐서 {name} 데이터가 잘렸습니다")
            data = np.frombuffer(body, dtype=dtype, count=nbytes // dtype.itemsize, offset=offset)
            arrays[name] = data.reshape(shape).astype(dtype.newbyteorder("="))
            offset += nbytes
        if offset != len(body):
            raise ValueError(f"텐서 테이블 뒤에 {len(body) - offset} bytes가 남았습니다")
    except (KeyError, ValueError, struct.error, UnicodeDecodeError) as e:
        raise CheckpointContentError(f"체크포인트 내용을 해석할 수 없습니다: {e}") from None
    return arrays, header


# ==================== 파일 입출력 ====================

def save_checkpoint(store: ParamStore, cfg: RunConfig, path: str, tasks: Optional[TaskRegistry] = None,
                    stage: str = "", extra: Optional[Dict[str, Any]] = None) -> str:
    """
    ParamStore와 RunConfig를 UDDF 파일로 저장

    같은 (store, cfg, tasks, stage, extra)는 바이트 단위로 같은 파일을 만듭니다.

    Returns:
        저장 경로
    """
    tasks = tasks or TaskRegistry(slots=cfg.task_slots, tasks=cfg.tasks)
    header = {
        "run_config": cfg.model_dump(mode="json"),
        "tasks": tasks.to_dict(),
        "stage": stage,
        "extra": extra or {},
    }
    payload = encode_checkpoint({name: value.data for name, value in store.items()}, header)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as f:
        f.write(payload)
    logger.info(f"체크포인트 저장: {path} ({len(store)}개 텐서, {len(payload)} bytes)")
    return path


def read_checkpoint(path: str) -> CheckpointData:
    """UDDF 파일 → CheckpointData"""
    if not os.path.exists(path):
        raise CheckpointError(f"체크포인트 파일이 없습니다: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    arrays, header = decode_checkpoint(raw)
    try:
        cfg = validate_run_config(header.get("run_config", {}))
    except ConfigError as e:
        raise CheckpointContentError(f"체크포인트의 run_config가 잘못되었습니다: {e}") from None
    if "tasks" in header:
        tasks = TaskRegistry.from_dict(header["tasks"])
    else:
        tasks = TaskRegistry(slots=cfg.task_slots, tasks=cfg.tasks)
    return CheckpointData(arrays=arrays, run_config=cfg, tasks=tasks,
                          stage=header.get("stage", ""), extra=header.get("extra", {}))


def load_checkpoint(path: str) -> Tuple[ParamStore, RunConfig]:
    """
    UDDF 파일 → (ParamStore, RunConfig)

    Raises:
        CheckpointMagicError, CheckpointCRCError, CheckpointVersionError: 형식 오류별 코드
    """
    data = read_checkpoint(path)
    store = ParamStore()
    for name in sorted(data.arrays):
        array = data.arrays[name]
        store.add(name, Tensor(array, dtype=array.dtype))
    return store, data.run_config


def model_from_checkpoint(data: CheckpointData, cfg: Optional[RunConfig] = None,
                          with_cpb: Optional[bool] = None) -> UniDocModel:
    """
    체크포인트 값으로 모델 생성

    Args:
        data: read_checkpoint 결과
        cfg: 구조 설정 (기본: 체크포인트의 run_config)
        with_cpb: None이면 체크포인트에 cpb 그룹이 있을 때만 CPB 생성

    Raises:
        CheckpointContentError: 필요한 텐서가 체크포인트에 없음
    """
    cfg = cfg or data.run_config
    has_cpb = data.has_group("cpb")
    attach = has_cpb if with_cpb is None else with_cpb
    model = build_model(cfg.denoiser_config(), cfg.seed, tasks=data.tasks, with_cpb=attach)
    missing = model.store.load_arrays(data.arrays)
    required = [n for n in missing if not (n.startswith("cpb.") and not has_cpb)]
    if required:
        raise CheckpointContentError(
            f"체크포인트에 필요한 텐서가 없습니다: {required[:5]} (총 {len(required)}개)"
        )
    unknown = sorted(set(data.arrays) - set(model.store.names()))
    if unknown:
        raise CheckpointContentError(f"모델 구조와 맞지 않는 텐서: {unknown[:5]}")
    return model
