"""
pose/_types.py - 포즈 데이터 타입

Pose3D / Pose2D는 numpy 배열 (J×3 mm 루트 상대 / J×2 정규화 이미지 좌표).
ConditioningFeatures, PoseSample, HypothesisSet은 생성 후 불변.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# J×3, mm, 루트 상대 (coords[0] = 0)
Pose3D = np.ndarray
# J×2, 정규화 이미지 좌표 [-1, 1]
Pose2D = np.ndarray


def frozen_array(values, dtype=np.float64) -> np.ndarray:
    """읽기 전용 복사본"""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConditioningFeatures:
    """조건 디스크립터 F: (L+1) × J × d

    채널 0..L-1 = 컨텍스트 레벨, 채널 L = 포즈 채널.
    """
    tensor: np.ndarray

    def __post_init__(self):
        if self.tensor.ndim != 3:
            raise ValueError(f"features must be (L+1, J, d), got shape {self.tensor.shape}")
        if self.tensor.shape[0] < 1:
            raise ValueError("features need at least the pose channel")
        if self.tensor.flags.writeable or self.tensor.dtype != np.float32:
            object.__setattr__(self, "tensor", frozen_array(self.tensor, np.float32))

    @property
    def L(self) -> int:
        return self.tensor.shape[0] - 1

    @property
    def J(self) -> int:
        return self.tensor.shape[1]

    @property
    def d(self) -> int:
        return self.tensor.shape[2]

    @property
    def pose_channel(self) -> np.ndarray:
        return self.tensor[self.L]

    @property
    def context_channels(self) -> np.ndarray:
        return self.tensor[: self.L]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConditioningFeatures):
            return NotImplemented
        return self.tensor.shape == other.tensor.shape and bool(np.array_equal(self.tensor, other.tensor))


@dataclass(frozen=True, eq=False)
class PoseSample:
    """한 프레임의 학습/평가 샘플"""
    sample_id: str
    pose3d: Pose3D
    pose2d: Pose2D
    features: ConditioningFeatures
    action_tag: str | None = None

    def __post_init__(self):
        pose3d = frozen_array(self.pose3d)
        pose2d = frozen_array(self.pose2d)
        if pose3d.ndim != 2 or pose3d.shape[1] != 3:
            raise ValueError(f"{self.sample_id}: pose3d must be J×3, got {pose3d.shape}")
        if pose2d.shape != (pose3d.shape[0], 2):
            raise ValueError(f"{self.sample_id}: pose2d shape {pose2d.shape} != ({pose3d.shape[0]}, 2)")
        if self.features.J != pose3d.shape[0]:
            raise ValueError(f"{self.sample_id}: features J={self.features.J} != pose J={pose3d.shape[0]}")
        if not (np.all(np.isfinite(pose3d)) and np.all(np.isfinite(pose2d))):
            raise ValueError(f"{self.sample_id}: non-finite coordinates")
        object.__setattr__(self, "pose3d", pose3d)
        object.__setattr__(self, "pose2d", pose2d)

    @property
    def J(self) -> int:
        return self.pose3d.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PoseSample):
            return NotImplemented
        return (
            self.sample_id == other.sample_id
            and self.action_tag == other.action_tag
            and np.array_equal(self.pose3d, other.pose3d)
            and np.array_equal(self.pose2d, other.pose2d)
            and self.features == other.features
        )


@dataclass(frozen=True, eq=False)
class HypothesisSet:
    """한 프레임의 H개 후보 3D 포즈 (mm, 루트 상대)

    sampler_config: 생성 설정 스냅샷 (K, T, variant, seed)
    """
    frame_id: str
    hypotheses: np.ndarray
    sampler_config: dict
    action_tag: str | None = None

    def __post_init__(self):
        hyp = frozen_array(self.hypotheses)
        if hyp.ndim != 3 or hyp.shape[2] != 3:
            raise ValueError(f"{self.frame_id}: hypotheses must be H×J×3, got {hyp.shape}")
        if hyp.shape[0] < 1:
            raise ValueError(f"{self.frame_id}: at least one hypothesis required")
        if not np.all(np.isfinite(hyp)):
            raise ValueError(f"{self.frame_id}: non-finite hypothesis coordinates")
        object.__setattr__(self, "hypotheses", hyp)
        object.__setattr__(self, "sampler_config", dict(self.sampler_config))

    @property
    def H(self) -> int:
        return self.hypotheses.shape[0]

    @property
    def J(self) -> int:
        return self.hypotheses.shape[1]

    def prefix(self, H: int) -> "HypothesisSet":
        """앞 H개 가설만 (프리픽스 시딩이면 더 작은 H 샘플링과 동일)"""
        if not 1 <= H <= self.H:
            raise ValueError(f"prefix size {H} outside [1, {self.H}]")
        config = dict(self.sampler_config, H=H)
        return HypothesisSet(self.frame_id, self.hypotheses[:H], config, self.action_tag)
