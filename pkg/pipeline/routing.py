"""
Routing Functions - run-all 그래프 분기 로직

반복 횟수가 0인 단계는 건너뜁니다.
"""
from pipeline.state import PipelineState


def route_after_prepare(state: PipelineState) -> str:
    """prepare 후 라우팅: Stage 1을 학습할지, 주어진 체크포인트로 바로 넘어갈지"""
    if state["run_config"].get("stage1_iters", 0) > 0:
        return "stage1_node"
    return route_after_stage1(state)


def route_after_stage1(state: PipelineState) -> str:
    """stage1 후 라우팅"""
    if state["run_config"].get("stage2_iters", 0) > 0:
        return "stage2_node"
    return route_after_stage2(state)


def route_after_stage2(state: PipelineState) -> str:
    """stage2 후 라우팅: 새 태스크가 지정된 경우에만 extend"""
    cfg = state["run_config"]
    if cfg.get("new_task") and cfg.get("extend_iters", 0) > 0:
        return "extend_node"
    return "eval_node"
