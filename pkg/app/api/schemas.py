"""
API Schemas - Pydantic 모델 정의
"""
from typing import Dict, List, Optional

from pydantic import BaseModel


class HealthResponse(BaseModel):
    """헬스 체크 응답"""
    status: str
    checkpoint: str
    loaded: bool
    stage: Optional[str] = None
    tasks: List[str] = []
    has_cpb: bool = False
    group_sizes: Dict[str, int] = {}


class PriorsResponse(BaseModel):
    """Prior Pool 채널 요약"""
    width: int
    height: int
    channels: List[str]
    means: Dict[str, float]


class ErrorResponse(BaseModel):
    """UniDocError 응답 (HTTP 400)"""
    code: str
    detail: str
