"""
liftkit - 확산 기반 단일 프레임 2D → 3D 사람 포즈 리프팅

2D 키포인트 + 다단계 조건 특징으로부터 3D 포즈 가설 여러 개를 샘플링하고,
가설 집계 / 신뢰도 필터링 / MPJPE 계열 평가까지 수행하는 실험 엔진.
"""

from .config import LIFTKIT_VERSION as __version__
from .state import RunManifest
from .core import Core, ExperimentConfig
from .diffusion import LiftEngine

__all__ = [
    "RunManifest",
    "Core",
    "ExperimentConfig",
    "LiftEngine",
    "__version__",
]
