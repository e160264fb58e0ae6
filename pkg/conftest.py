"""conftest.py - pytest 실행 시 저장소 루트를 import 경로에 추가 (flat import 지원)"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
