"""
UniDoc - 문서 이미지 복원/dewarp diffusion 모델
엔트리포인트 (python main.py <command> ...)
"""
from app.cli import main

if __name__ == "__main__":
    main()
