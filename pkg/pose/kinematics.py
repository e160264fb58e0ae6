"""
pose/kinematics.py - 순운동학 & 합성 데이터셋 생성

모션캡처 데이터 대체용. 관절 각을 범위 내에서 무작위 추출 →
순운동학으로 3D 포즈 생성 → 핀홀 투영 + 가우시안 노이즈로 2D 포즈 →
합성 특징 추출기로 조건 디스크립터 F 생성.

같은 (spec, 설정, seed)이면 결과가 비트 단위로 동일.
"""
from __future__ import annotations

import logging

import numpy as np

try:
    from ..config import ACTION_PRESETS, ROOT_ROTATION_LIMITS
    from ..errors import ConfigError
    from ._types import PoseSample
    from .skeleton import Camera, SkeletonSpec, project
    from .features import extract_features
except ImportError:
    from config import ACTION_PRESETS, ROOT_ROTATION_LIMITS
    from errors import ConfigError
    from pose._types import PoseSample
    from pose.skeleton import Camera, SkeletonSpec, project
    from pose.features import extract_features

logger = logging.getLogger(__name__)


def euler_to_matrix(angles: np.ndarray) -> np.ndarray:
    """(..., 3) 오일러 각 (x, y, z) → (..., 3, 3) 회전행렬, R = Rz @ Ry @ Rx"""
    angles = np.asarray(angles, dtype=np.float64)
    cx, cy, cz = np.cos(angles[..., 0]), np.cos(angles[..., 1]), np.cos(angles[..., 2])
    sx, sy, sz = np.sin(angles[..., 0]), np.sin(angles[..., 1]), np.sin(angles[..., 2])
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cz * cy
    R[..., 0, 1] = cz * sy * sx - sz * cx
    R[..., 0, 2] = cz * sy * cx + sz * sx
    R[..., 1, 0] = sz * cy
    R[..., 1, 1] = sz * sy * sx + cz * cx
    R[..., 1, 2] = sz * sy * cx - cz * sx
    R[..., 2, 0] = -sy
    R[..., 2, 1] = cy * sx
    R[..., 2, 2] = cy * cx
    return R


def forward_kinematics(
    spec: SkeletonSpec,
    local_angles: np.ndarray,
    root_angles: np.ndarray,
) -> np.ndarray:
    """관절 로컬 각 → 루트 상대 3D 포즈 (mm)

    R_world[j] = R_world[parent] @ R_local[j]
    pos[j] = pos[parent] + R_world[j] @ (bone_length[j] * rest_dir[j])
    회전만 적용하므로 뼈 길이는 정확히 보존된다.
    """
    J = spec.J
    R_local = euler_to_matrix(local_angles)
    R_world = np.empty((J, 3, 3))
    R_world[0] = euler_to_matrix(root_angles) @ R_local[0]
    pos = np.zeros((J, 3))
    for j in range(1, J):
        p = spec.parents[j]
        R_world[j] = R_world[p] @ R_local[j]
        pos[j] = pos[p] + R_world[j] @ (spec.bone_lengths[j] * spec.rest_dirs[j])
    return pos


def bone_lengths_of(spec: SkeletonSpec, pose3d: np.ndarray) -> np.ndarray:
    """포즈 좌표에서 뼈 길이 재계산 (루트는 0)"""
    pose3d = np.asarray(pose3d, dtype=np.float64)
    lengths = np.zeros(spec.J)
    for j in range(1, spec.J):
        lengths[j] = np.linalg.norm(pose3d[j] - pose3d[spec.parents[j]])
    return lengths


def _action_limits(spec: SkeletonSpec, action: dict[str, float]) -> np.ndarray:
    """동작 프리셋 적용: 범위 중심 기준 폭 스케일 + 중앙 관절 x각 오프셋"""
    lo, hi = spec.limits[..., 0], spec.limits[..., 1]
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * action["scale"]
    limits = np.stack([center - half, center + half], axis=-1)
    trunk = (spec.mirror_map == np.arange(spec.J)) & (np.arange(spec.J) != 0)
    limits[trunk, 0, :] += action["trunk_pitch"]
    return limits


def generate_synthetic_dataset(
    spec: SkeletonSpec,
    n: int,
    camera: Camera,
    noise_std_2d: float,
    seed: int,
    *,
    L: int = 4,
    d: int = 32,
    context_seed: int = 1234,
    actions: tuple[str, ...] | None = None,
    id_prefix: str = "s",
) -> list[PoseSample]:
    """합성 PoseSample 리스트 생성

    샘플마다 동작 태그 → 관절 각 → 순운동학 → 투영 + 노이즈 → 특징 추출 순서로
    단일 Generator에서 고정 순서로 난수를 뽑는다.
    """
    if n < 0:
        raise ConfigError(f"dataset size must be non-negative, got {n}")
    if noise_std_2d < 0:
        raise ConfigError(f"noise_std_2d must be non-negative, got {noise_std_2d}")
    if not isinstance(camera, Camera):
        camera = Camera.from_dict(camera)

    action_names = tuple(actions) if actions else tuple(ACTION_PRESETS)
    unknown = [a for a in action_names if a not in ACTION_PRESETS]
    if unknown:
        raise ConfigError(f"unknown action presets: {unknown}")
    action_limits = {a: _action_limits(spec, ACTION_PRESETS[a]) for a in action_names}
    root_limits = np.asarray(ROOT_ROTATION_LIMITS, dtype=np.float64)

    rng = np.random.default_rng(seed)
    samples: list[PoseSample] = []
    for i in range(n):
        action = action_names[int(rng.integers(len(action_names)))]
        limits = action_limits[action]
        local = rng.uniform(limits[..., 0], limits[..., 1])
        local[0] = 0.0
        root = rng.uniform(root_limits[:, 0], root_limits[:, 1])
        pose3d = forward_kinematics(spec, local, root)

        pose2d = project(pose3d, camera)
        if noise_std_2d > 0:
            pose2d = pose2d + rng.normal(0.0, noise_std_2d, size=pose2d.shape)

        features = extract_features(pose2d, context_seed=context_seed, L=L, d=d)
        samples.append(PoseSample(
            sample_id=f"{id_prefix}{i:06d}",
            pose3d=pose3d,
            pose2d=pose2d,
            features=features,
            action_tag=action,
        ))

    logger.info(f"합성 데이터셋 생성: {n}건 (J={spec.J}, L={L}, d={d}, seed={seed})")
    return samples


def mean_pose(dataset: list[PoseSample]) -> np.ndarray:
    """상수 평균 포즈 (학습 데이터 기준 베이스라인 예측기)"""
    if not dataset:
        raise ValueError("mean_pose of an empty dataset")
    return np.mean(np.stack([s.pose3d for s in dataset]), axis=0)
