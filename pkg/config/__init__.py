"""
config/ - 정적 기본값 & 프리셋 패키지

스켈레톤 테이블, 확산/디노이저/학습 기본값, 평가 그리드 등
엔진과 CLI가 공유하는 정적 설정을 모아둔 패키지.
"""
from .skeletons import *   # noqa: F401,F403
from .defaults import *    # noqa: F401,F403
from .metrics import *     # noqa: F401,F403
