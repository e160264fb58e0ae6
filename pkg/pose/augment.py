"""
pose/augment.py - 좌우 반전 증강

x좌표 부호 반전 + mirror_map에 따른 관절 행 치환.
특징 F는 관절 축만 치환하고 값은 그대로 둔다.
mirror_map이 involution이므로 flip(flip(s)) = s.
"""
from __future__ import annotations

import numpy as np

try:
    from ._types import ConditioningFeatures, PoseSample
    from .skeleton import SkeletonSpec
except ImportError:
    from pose._types import ConditioningFeatures, PoseSample
    from pose.skeleton import SkeletonSpec


def flip_coords(coords: np.ndarray, mirror_map: np.ndarray) -> np.ndarray:
    """(..., J, k) 좌표 배치 반전: 관절 축 치환 후 x 부호 반전"""
    out = np.array(coords[..., mirror_map, :], copy=True)
    out[..., 0] = -out[..., 0]
    return out


def flip_features(tensor: np.ndarray, mirror_map: np.ndarray) -> np.ndarray:
    """(..., L+1, J, d) 특징 배치의 관절 축 치환"""
    return tensor[..., mirror_map, :]


def horizontal_flip(sample: PoseSample, spec: SkeletonSpec) -> PoseSample:
    if sample.J != spec.J:
        raise ValueError(f"{sample.sample_id}: sample J={sample.J} != skeleton J={spec.J}")
    mirror = spec.mirror_map
    return PoseSample(
        sample_id=sample.sample_id,
        pose3d=flip_coords(sample.pose3d, mirror),
        pose2d=flip_coords(sample.pose2d, mirror),
        features=ConditioningFeatures(flip_features(sample.features.tensor, mirror)),
        action_tag=sample.action_tag,
    )
