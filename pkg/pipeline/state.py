"""
Pipeline State - run-all 그래프 상태 정의
"""
from typing import Dict, List, Optional, TypedDict


class PipelineState(TypedDict):
    """run-all 그래프 상태 (체크포인트 간에는 경로만 전달)"""

    # === 설정 ===
    run_config: Dict                     # RunConfig.model_dump(mode="json")

    # === 단계별 산출물 ===
    stage1_checkpoint: Optional[str]
    stage2_checkpoint: Optional[str]
    extend_checkpoint: Optional[str]
    eval_records: List[Dict]

    # === 리포트 ===
    reports: Dict[str, Dict]             # stage 이름 -> windows / drift 등
    completed: List[str]                 # 실행된 노드 순서
