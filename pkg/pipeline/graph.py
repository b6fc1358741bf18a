"""
Pipeline Graph - run-all LangGraph 그래프 빌드 및 실행

prepare → stage1 → stage2 → (extend) → eval
"""
import logging
from typing import Dict

from langgraph.checkpoint.memory import MemorySaver
from langgraph.graph import END, StateGraph

from pipeline.config import RunConfig
from pipeline.nodes import eval_node, extend_node, prepare_node, stage1_node, stage2_node
from pipeline.routing import route_after_prepare, route_after_stage1, route_after_stage2
from pipeline.state import PipelineState

logger = logging.getLogger(__name__)


def create_initial_state(cfg: RunConfig) -> PipelineState:
    """초기 상태 생성

    Args:
        cfg: 검증된 실행 설정
    """
    return {
        "run_config": cfg.model_dump(mode="json"),
        "stage1_checkpoint": None,
        "stage2_checkpoint": None,
        "extend_checkpoint": None,
        "eval_records": [],
        "reports": {},
        "completed": [],
    }


def create_pipeline_graph():
    """run-all 그래프 생성"""

    workflow = StateGraph(PipelineState)

    # ===== 노드 추가 =====
    workflow.add_node("prepare_node", prepare_node)
    workflow.add_node("stage1_node", stage1_node)
    workflow.add_node("stage2_node", stage2_node)
    workflow.add_node("extend_node", extend_node)
    workflow.add_node("eval_node", eval_node)

    # ===== Entry Point =====
    workflow.set_entry_point("prepare_node")

    # ===== 반복 횟수 0인 단계 건너뛰기 =====
    workflow.add_conditional_edges(
        "prepare_node",
        route_after_prepare,
        {
            "stage1_node": "stage1_node",
            "stage2_node": "stage2_node",
            "extend_node": "extend_node",
            "eval_node": "eval_node",
        }
    )
    workflow.add_conditional_edges(
        "stage1_node",
        route_after_stage1,
        {
            "stage2_node": "stage2_node",
            "extend_node": "extend_node",
            "eval_node": "eval_node",
        }
    )
    workflow.add_conditional_edges(
        "stage2_node",
        route_after_stage2,
        {
            "extend_node": "extend_node",
            "eval_node": "eval_node",
        }
    )

    # ===== 마무리 =====
    workflow.add_edge("extend_node", "eval_node")
    workflow.add_edge("eval_node", END)

    # ===== 컴파일 =====
    checkpointer = MemorySaver()
    return workflow.compile(checkpointer=checkpointer)


def run_pipeline(cfg: RunConfig) -> Dict:
    """
    전체 파이프라인 실행

    Returns:
        최종 그래프 상태
    """
    graph = create_pipeline_graph()
    config = {"configurable": {"thread_id": f"run-{cfg.seed}"}}
    for event in graph.stream(create_initial_state(cfg), config):
        for node_name in event:
            logger.info(f"[run-all] Node: {node_name} 완료")
    return graph.get_state(config).values
