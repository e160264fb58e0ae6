"""
pose/ - 포즈 코어 패키지

스켈레톤/포즈 데이터 모델, 합성 데이터 생성, 합성 특징 추출, 반전 증강.
"""
from ._types import ConditioningFeatures, HypothesisSet, PoseSample
from .skeleton import Camera, SkeletonSpec, build_skeleton, project
from .features import extract_features, get_pose_lift
from .kinematics import (
    bone_lengths_of,
    forward_kinematics,
    generate_synthetic_dataset,
    mean_pose,
)
from .augment import flip_coords, flip_features, horizontal_flip

__all__ = [
    "ConditioningFeatures",
    "HypothesisSet",
    "PoseSample",
    "Camera",
    "SkeletonSpec",
    "build_skeleton",
    "project",
    "extract_features",
    "get_pose_lift",
    "bone_lengths_of",
    "forward_kinematics",
    "generate_synthetic_dataset",
    "mean_pose",
    "flip_coords",
    "flip_features",
    "horizontal_flip",
]
