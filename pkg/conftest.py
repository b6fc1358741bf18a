"""테스트 실행 시 최상위 패키지(core, autograd, ...)를 설치 없이 import"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
