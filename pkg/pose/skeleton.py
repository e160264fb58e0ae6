"""
pose/skeleton.py - 스켈레톤 명세 & 핀홀 카메라

SkeletonSpec: 관절 트리(부모 인덱스), 뼈 길이, 좌우 대응(mirror_map)
Camera: 핀홀 투영 파라미터 (픽셀 단위 초점거리/주점, 피사체 거리 mm)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

try:
    from ..config import SKELETON_PRESETS
    from ..errors import ConfigError
    from ._types import frozen_array
except ImportError:
    from config import SKELETON_PRESETS
    from errors import ConfigError
    from pose._types import frozen_array

logger = logging.getLogger(__name__)

ROOT_PARENT = -1


@dataclass(frozen=True, eq=False)
class SkeletonSpec:
    """관절 트리 명세

    parents[0] = -1 (루트 sentinel), 자식은 항상 부모보다 뒤 인덱스.
    rest_dirs: 부모 프레임 기준 뼈 방향 단위벡터.
    limits: (J, 3, 2) 관절 로컬 오일러 각 범위.
    """
    name: str
    joint_names: tuple[str, ...]
    parents: np.ndarray
    bone_lengths: np.ndarray
    mirror_map: np.ndarray
    rest_dirs: np.ndarray
    limits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", frozen_array(self.parents, np.int64))
        object.__setattr__(self, "bone_lengths", frozen_array(self.bone_lengths))
        object.__setattr__(self, "mirror_map", frozen_array(self.mirror_map, np.int64))
        object.__setattr__(self, "rest_dirs", frozen_array(self.rest_dirs))
        object.__setattr__(self, "limits", frozen_array(self.limits))
        self.validate()

    @property
    def J(self) -> int:
        return len(self.parents)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joint_names": list(self.joint_names),
            "parents": self.parents.tolist(),
            "bone_lengths": self.bone_lengths.tolist(),
            "mirror_map": self.mirror_map.tolist(),
            "rest_dirs": self.rest_dirs.tolist(),
            "limits": self.limits.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SkeletonSpec":
        return cls(
            name=data["name"],
            joint_names=tuple(data["joint_names"]),
            parents=data["parents"],
            bone_lengths=data["bone_lengths"],
            mirror_map=data["mirror_map"],
            rest_dirs=data["rest_dirs"],
            limits=data["limits"],
        )

    def validate(self) -> None:
        J = self.J
        if J < 1:
            raise ConfigError("skeleton needs at least one joint")
        shapes = {
            "joint_names": (len(self.joint_names),),
            "bone_lengths": self.bone_lengths.shape,
            "mirror_map": self.mirror_map.shape,
            "rest_dirs": self.rest_dirs.shape[:1],
            "limits": self.limits.shape[:1],
        }
        for field_name, shape in shapes.items():
            if shape[0] != J:
                raise ConfigError(f"{self.name}: {field_name} length {shape[0]} != J={J}")
        if self.parents[0] != ROOT_PARENT or np.count_nonzero(self.parents == ROOT_PARENT) != 1:
            raise ConfigError(f"{self.name}: exactly one root sentinel at index 0 required")
        for j in range(1, J):
            # 부모가 앞 인덱스면 사이클이 생길 수 없음
            if not 0 <= self.parents[j] < j:
                raise ConfigError(f"{self.name}: joint {j} parent {self.parents[j]} must precede it")
            if not self.bone_lengths[j] > 0:
                raise ConfigError(f"{self.name}: bone length of joint {j} must be positive")
        if sorted(self.mirror_map.tolist()) != list(range(J)):
            raise ConfigError(f"{self.name}: mirror_map is not a permutation")
        if not np.array_equal(self.mirror_map[self.mirror_map], np.arange(J)):
            raise ConfigError(f"{self.name}: mirror_map must be an involution")
        if self.mirror_map[0] != 0:
            raise ConfigError(f"{self.name}: root must map to itself")


def _mirror_from_names(names: list[str]) -> list[int]:
    index = {n: i for i, n in enumerate(names)}
    mirror = []
    for n in names:
        if n.startswith("l_"):
            mirror.append(index["r_" + n[2:]])
        elif n.startswith("r_"):
            mirror.append(index["l_" + n[2:]])
        else:
            mirror.append(index[n])
    return mirror


def build_skeleton(name: str = "desk8") -> SkeletonSpec:
    """프리셋 이름으로 SkeletonSpec 생성

    오른쪽 관절의 각도 범위는 왼쪽 짝을 x축 반전으로 거울 대칭:
    x각 범위는 그대로, y/z각 범위는 부호 반전.
    """
    if name not in SKELETON_PRESETS:
        raise ConfigError(f"unknown skeleton preset: {name} (available: {', '.join(SKELETON_PRESETS)})")
    preset = SKELETON_PRESETS[name]
    names = list(preset["names"])
    mirror = _mirror_from_names(names)

    limits = np.zeros((len(names), 3, 2))
    for j, joint in enumerate(names):
        if joint in preset["limits"]:
            limits[j] = preset["limits"][joint]
        elif joint.startswith("r_") and names[mirror[j]] in preset["limits"]:
            left = np.asarray(preset["limits"][names[mirror[j]]], dtype=np.float64)
            limits[j, 0] = left[0]
            limits[j, 1] = (-left[1, 1], -left[1, 0])
            limits[j, 2] = (-left[2, 1], -left[2, 0])

    rest = np.asarray(preset["rest_dirs"], dtype=np.float64)
    norms = np.linalg.norm(rest, axis=1, keepdims=True)
    rest = np.divide(rest, norms, out=np.zeros_like(rest), where=norms > 0)

    return SkeletonSpec(
        name=name,
        joint_names=tuple(names),
        parents=preset["parents"],
        bone_lengths=preset["bone_lengths"],
        mirror_map=mirror,
        rest_dirs=rest,
        limits=limits,
    )


@dataclass(frozen=True)
class Camera:
    """핀홀 카메라

    focal/center: 픽셀, resolution: (w, h) 픽셀, distance: 루트까지 깊이 (mm).
    """
    focal: tuple[float, float] = (1150.0, 1150.0)
    center: tuple[float, float] = (500.0, 500.0)
    resolution: tuple[int, int] = (1000, 1000)
    distance: float = 5000.0

    def __post_init__(self):
        if min(self.focal) <= 0:
            raise ConfigError(f"camera focal length must be positive, got {self.focal}")
        if min(self.resolution) <= 0:
            raise ConfigError(f"camera resolution must be positive, got {self.resolution}")
        if self.distance <= 0:
            raise ConfigError(f"camera distance must be positive, got {self.distance}")

    @classmethod
    def from_dict(cls, data: dict) -> "Camera":
        return cls(
            focal=tuple(float(v) for v in data.get("focal", cls.focal)),
            center=tuple(float(v) for v in data.get("center", cls.center)),
            resolution=tuple(int(v) for v in data.get("resolution", cls.resolution)),
            distance=float(data.get("distance", cls.distance)),
        )

    def to_dict(self) -> dict:
        return {
            "focal": list(self.focal),
            "center": list(self.center),
            "resolution": list(self.resolution),
            "distance": self.distance,
        }


def project(pose3d: np.ndarray, camera: Camera) -> np.ndarray:
    """루트 상대 3D 포즈(mm) → 정규화 이미지 좌표 [-1, 1]

    피사체 루트는 카메라 앞 camera.distance 위치, 이미지 v축은 아래 방향.
    """
    pose3d = np.asarray(pose3d, dtype=np.float64)
    depth = pose3d[..., 2] + camera.distance
    if np.any(depth <= 0):
        raise ValueError("joint behind the camera plane")
    u = camera.center[0] + camera.focal[0] * pose3d[..., 0] / depth
    v = camera.center[1] - camera.focal[1] * pose3d[..., 1] / depth
    w, h = camera.resolution
    return np.stack([2.0 * u / w - 1.0, 2.0 * v / h - 1.0], axis=-1)
