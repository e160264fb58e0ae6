"""
config/skeletons.py - 스켈레톤/동작 프리셋

SKELETON_PRESETS: 이름 → 관절 트리, 뼈 길이(mm), 좌우 대응, 기준 방향, 각도 범위
ACTION_PRESETS: 합성 동작 태그 → 각도 범위 스케일 + 몸통 pitch 오프셋
ROOT_ROTATION_LIMITS: 루트(골반) 전역 회전 범위

좌표계: x = 피사체 왼쪽, y = 위, z = 카메라 반대 방향.
각도 범위는 관절 로컬 오일러 각 (x, y, z) 라디안.
오른쪽 관절의 범위는 왼쪽 짝에서 자동으로 거울 대칭 생성 (pose/skeleton.py).
"""
from __future__ import annotations

import math

# 루트 전역 회전: yaw는 전방위, pitch/roll은 작게
ROOT_ROTATION_LIMITS: tuple[tuple[float, float], ...] = (
    (-0.2, 0.2),            # x (pitch)
    (-math.pi, math.pi),    # y (yaw)
    (-0.2, 0.2),            # z (roll)
)

SKELETON_PRESETS: dict[str, dict] = {
    # 데스크 스케일 기본값 (J=8)
    "desk8": {
        "names": [
            "pelvis", "thorax",
            "l_knee", "l_ankle", "r_knee", "r_ankle",
            "l_wrist", "r_wrist",
        ],
        "parents": [-1, 0, 0, 2, 0, 4, 1, 1],
        "bone_lengths": [0.0, 480.0, 520.0, 440.0, 520.0, 440.0, 620.0, 620.0],
        "rest_dirs": [
            (0.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.25, -1.0, 0.0),
            (0.0, -1.0, 0.0),
            (-0.25, -1.0, 0.0),
            (0.0, -1.0, 0.0),
            (0.45, -1.0, 0.0),
            (-0.45, -1.0, 0.0),
        ],
        # 중앙 관절과 왼쪽 관절만 정의
        "limits": {
            "thorax": ((-0.3, 0.6), (-0.6, 0.6), (-0.3, 0.3)),
            "l_knee": ((-1.4, 0.5), (-0.5, 0.5), (-0.2, 0.6)),
            "l_ankle": ((0.0, 1.8), (-0.2, 0.2), (-0.1, 0.1)),
            "l_wrist": ((-2.2, 1.0), (-0.8, 0.8), (-0.3, 2.0)),
        },
    },
    # 전체 스케일 (Human3.6M 17관절 순서)
    "h36m17": {
        "names": [
            "pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
            "spine", "thorax", "neck", "head",
            "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist",
        ],
        "parents": [-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15],
        "bone_lengths": [
            0.0, 130.0, 450.0, 440.0, 130.0, 450.0, 440.0,
            230.0, 250.0, 110.0, 120.0,
            150.0, 280.0, 250.0, 150.0, 280.0, 250.0,
        ],
        "rest_dirs": [
            (0.0, 0.0, 0.0),
            (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, -1.0, 0.0),
            (1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, -1.0, 0.0),
            (0.0, 1.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0, 0.0),
            (1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, -1.0, 0.0),
            (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, -1.0, 0.0),
        ],
        "limits": {
            "l_hip": ((-0.1, 0.1), (-0.1, 0.1), (-0.1, 0.1)),
            "l_knee": ((-1.4, 0.5), (-0.5, 0.5), (-0.2, 0.6)),
            "l_ankle": ((0.0, 1.8), (-0.2, 0.2), (-0.1, 0.1)),
            "spine": ((-0.2, 0.5), (-0.3, 0.3), (-0.2, 0.2)),
            "thorax": ((-0.2, 0.3), (-0.3, 0.3), (-0.2, 0.2)),
            "neck": ((-0.3, 0.4), (-0.5, 0.5), (-0.2, 0.2)),
            "head": ((-0.3, 0.3), (-0.3, 0.3), (-0.2, 0.2)),
            "l_shoulder": ((-0.1, 0.1), (-0.1, 0.1), (-0.2, 0.2)),
            "l_elbow": ((-2.2, 1.0), (-0.8, 0.8), (-0.3, 2.0)),
            "l_wrist": ((-2.0, 0.2), (-0.4, 0.4), (-0.2, 0.2)),
        },
    },
}

# scale: 각도 범위 폭 배율, trunk_pitch: 중앙 관절 x각 오프셋
ACTION_PRESETS: dict[str, dict[str, float]] = {
    "stand": {"scale": 0.3, "trunk_pitch": 0.0},
    "walk": {"scale": 0.65, "trunk_pitch": 0.05},
    "bend": {"scale": 0.5, "trunk_pitch": 0.45},
    "reach": {"scale": 1.0, "trunk_pitch": -0.1},
}

DEFAULT_SKELETON = "desk8"

__all__ = [
    "ROOT_ROTATION_LIMITS",
    "SKELETON_PRESETS",
    "ACTION_PRESETS",
    "DEFAULT_SKELETON",
]
