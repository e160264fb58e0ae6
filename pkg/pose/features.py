"""
pose/features.py - 합성 조건 특징 추출기

실제 백본(HRNet + Deformable Context Extraction) 대체용.
출력 F의 형태 (L+1) × J × d 계약만 지킨다.

- 포즈 채널 (인덱스 L): 고정 시드 lift 행렬로 2D 포즈를 관절별 d차원으로 선형 투영
- 컨텍스트 채널 (0..L-1): (pose2d, context_seed, level)로 결정되는 다중 주파수
  랜덤 푸리에 특징. 전체 2D 포즈를 관절마다 섞어 넣으므로 포즈 채널의 복사본이 아님.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

try:
    from ._types import ConditioningFeatures, frozen_array
except ImportError:
    from pose._types import ConditioningFeatures, frozen_array

logger = logging.getLogger(__name__)

# 추출기 상태(lift 행렬)의 고정 시드
LIFT_SEED = 20240917


@dataclass(frozen=True, eq=False)
class PoseLift:
    """포즈 채널 선형 lift: (J, 2) @ weight (2, d) + bias (d,)"""
    weight: np.ndarray
    bias: np.ndarray

    def __call__(self, pose2d: np.ndarray) -> np.ndarray:
        return pose2d @ self.weight + self.bias


@lru_cache(maxsize=16)
def get_pose_lift(d: int, seed: int = LIFT_SEED) -> PoseLift:
    """추출기와 함께 배포되는 고정 lift (bias 0)"""
    rng = np.random.default_rng(seed)
    weight = rng.standard_normal((2, d))
    return PoseLift(weight=frozen_array(weight), bias=frozen_array(np.zeros(d)))


@lru_cache(maxsize=64)
def _context_basis(context_seed: int, level: int, J: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([context_seed, level, J, d])
    proj = rng.standard_normal((2 * J, J * d)) / np.sqrt(2 * J)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=J * d)
    return frozen_array(proj), frozen_array(phase)


def context_level(pose2d: np.ndarray, context_seed: int, level: int, d: int) -> np.ndarray:
    """컨텍스트 레벨 하나: sin(2^level · (p @ R) + φ) → (J, d)"""
    J = pose2d.shape[0]
    proj, phase = _context_basis(int(context_seed), int(level), J, int(d))
    flat = pose2d.reshape(-1) @ proj
    return np.sin((2.0 ** level) * flat + phase).reshape(J, d)


def extract_features(
    pose2d: np.ndarray,
    context_seed: int,
    L: int = 4,
    d: int = 32,
) -> ConditioningFeatures:
    """2D 포즈 → 조건 디스크립터 F ((L+1), J, d), float32

    입력 2D 포즈는 노이즈 여부와 무관하게 주어진 그대로 사용.
    """
    pose2d = np.asarray(pose2d, dtype=np.float64)
    if pose2d.ndim != 2 or pose2d.shape[1] != 2:
        raise ValueError(f"pose2d must be J×2, got shape {pose2d.shape}")
    if L < 0 or d < 1:
        raise ValueError(f"invalid feature geometry L={L}, d={d}")
    if not np.all(np.isfinite(pose2d)):
        raise ValueError("pose2d contains non-finite values")

    J = pose2d.shape[0]
    F = np.empty((L + 1, J, d), dtype=np.float64)
    for level in range(L):
        F[level] = context_level(pose2d, context_seed, level, d)
    F[L] = get_pose_lift(d)(pose2d)
    return ConditioningFeatures(F.astype(np.float32))
