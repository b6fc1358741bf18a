"""
Core Config - 전역 설정 및 상수 정의

파이프라인 상태(시드, 크기, 반복 횟수 등)는 RunConfig가 담당하고,
여기에는 로깅/서버/경로 같은 주변 설정만 둡니다.
"""
import logging
import os
import sys

from dotenv import load_dotenv

load_dotenv()

# 로깅 설정
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "[%(name)s] %(message)s"

# 저장소 경로
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "./runs")
CHECKPOINT_PATH = os.getenv("CHECKPOINT_PATH", os.path.join(OUTPUT_DIR, "stage2.uddf"))

# 서버 설정
HOST = os.getenv("HOST", "0.0.0.0")
PORT = int(os.getenv("PORT", 7860))

_handler = None


def setup_logging(level: str = None) -> None:
    """
    루트 로거 설정 (stderr, 한 줄 포맷)

    stdout은 eval JSON 라인 등 기계 출력 전용으로 남겨둡니다.
    호출할 때마다 현재 sys.stderr로 핸들러를 다시 연결합니다.

    Args:
        level: 로그 레벨 이름 (기본값: LOG_LEVEL)
    """
    global _handler
    root = logging.getLogger()
    if _handler is not None:
        root.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(_handler)
    root.setLevel((level or LOG_LEVEL).upper())
