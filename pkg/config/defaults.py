"""
config/defaults.py - 수치 기본값 & 스케일 프리셋

SCHEDULE_DEFAULTS: 확산 스케줄 (표준 DDPM 선형 β)
DENOISER_DEFAULTS / TRAIN_DEFAULTS / SAMPLER_DEFAULTS: 전체 스케일 기본값
SCALE_PRESETS: "desk" (CPU 데스크 스케일) / "full" (전체 스케일, h36m17) 덮어쓰기 값
COORD_SCALE: mm → 확산 공간 단위 (1000 = 미터)
"""
from __future__ import annotations

LIFTKIT_VERSION = "0.1.0"

# 확산 공간 좌표 = mm / COORD_SCALE (메트릭 계산 시 다시 곱함)
COORD_SCALE: float = 1000.0

# ᾱ_T가 이 값보다 크면 말단 가우시안 가정이 약하다고 경고
ALPHA_BAR_TERMINAL_WARN: float = 1e-3

SCHEDULE_DEFAULTS: dict = {
    "kind": "linear",
    "T": 1000,
    "beta_start": 1e-4,
    "beta_end": 0.02,
}

DENOISER_DEFAULTS: dict = {
    "d": 128,
    "heads": 4,
    "n_p2c": 4,
    "n_j2j": 4,
    "ffn_mult": 2,
    "channel_tokens": "flatten",   # "flatten" | "per_joint"
    "conditioning": "both",        # "both" | "pose" | "context"
    "init_seed": 0,
}

TRAIN_DEFAULTS: dict = {
    "batch_size": 128,
    "epochs": 50,
    "lr_start": 6e-4,
    "lr_decay_factor": 0.993,
    "flip_prob": 0.5,
    "clip_grad_norm": None,
}

ADAM_DEFAULTS: dict = {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8}

SAMPLER_DEFAULTS: dict = {"H": 20, "K": 20, "variant": "ddim"}

DATA_DEFAULTS: dict = {
    "skeleton": "desk8",
    "n_train": 5000,
    "n_test": 500,
    "noise_std_2d": 0.0,
    "L": 4,
    "d": 128,
    "context_seed": 1234,
    "camera": {
        "focal": [1150.0, 1150.0],
        "center": [500.0, 500.0],
        "resolution": [1000, 1000],
        "distance": 5000.0,
    },
}

SCALE_PRESETS: dict[str, dict] = {
    "desk": {
        "data": {"skeleton": "desk8", "L": 4, "d": 32},
        "denoiser": {"d": 32, "heads": 2, "n_p2c": 2, "n_j2j": 2},
        "train": {"epochs": 30},
    },
    "full": {
        "data": {"skeleton": "h36m17", "L": 4, "d": 128},
        "denoiser": {"d": 128, "heads": 4, "n_p2c": 4, "n_j2j": 4},
        "train": {"epochs": 50},
    },
}

# 프리셋을 지정하지 않았을 때 적용
DEFAULT_PRESET = "desk"

AGGREGATION_STRATEGIES: tuple[str, ...] = ("A", "M", "R", "B", "Bjoint")
SAMPLER_VARIANTS: tuple[str, ...] = ("ddim", "literal")

# 산출물 디렉토리 구조 (--out 하위)
ARTIFACT_DIRS: dict[str, str] = {
    "data": "data",
    "ckpt": "ckpt",
    "hyp": "hyp",
    "agg": "agg",
    "reports": "reports",
}

__all__ = [
    "LIFTKIT_VERSION",
    "COORD_SCALE",
    "ALPHA_BAR_TERMINAL_WARN",
    "SCHEDULE_DEFAULTS",
    "DENOISER_DEFAULTS",
    "TRAIN_DEFAULTS",
    "ADAM_DEFAULTS",
    "SAMPLER_DEFAULTS",
    "DATA_DEFAULTS",
    "SCALE_PRESETS",
    "DEFAULT_PRESET",
    "AGGREGATION_STRATEGIES",
    "SAMPLER_VARIANTS",
    "ARTIFACT_DIRS",
]
