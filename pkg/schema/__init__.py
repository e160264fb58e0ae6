"""
schema/ - 디스크 포맷 패키지

포즈 컨테이너(JSONL: dataset/hypotheses/predictions)와 바이너리 체크포인트.
"""
from .poses import *        # noqa: F401,F403
from .checkpoint import *   # noqa: F401,F403
