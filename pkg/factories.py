"""
factories.py - 인스턴스 팩토리 함수

ExperimentConfig, Core, LiftEngine, 스켈레톤 인스턴스 생성 로직.
CLI와 벤치마크/테스트 진입점에서 공통으로 사용.
"""
from __future__ import annotations

try:
    from .config import SCALE_PRESETS
    from .core import Core, ExperimentConfig
    from .diffusion import LiftEngine
    from .pose import SkeletonSpec, build_skeleton
    from .state import get_storage
except ImportError:
    from config import SCALE_PRESETS
    from core import Core, ExperimentConfig
    from diffusion import LiftEngine
    from pose import SkeletonSpec, build_skeleton
    from state import get_storage


def get_config(
    config_path: str | None = None,
    preset: str | None = None,
    overrides: dict | None = None,
    use_env: bool = True,
) -> ExperimentConfig:
    """설정 로드 + 검증

    Args:
        config_path: JSON 설정 파일 (중첩 섹션)
        preset: "desk" | "full": 파일의 preset 키보다 우선 (둘 다 없으면 desk)
        overrides: CLI 플래그에서 온 중첩 dict (최우선)
    """
    if preset is not None and preset not in SCALE_PRESETS:
        raise ValueError(f"지원하지 않는 프리셋: {preset}")
    config = ExperimentConfig.load(config_path, preset=preset, overrides=overrides, use_env=use_env)
    config.validate()
    return config


def get_core(config: ExperimentConfig) -> Core:
    """Core 인스턴스 생성 (매니페스트는 config.out_dir에 저장)"""
    return Core(config, storage=get_storage("file", out_dir=config.out_dir))


def get_skeleton(config: ExperimentConfig) -> SkeletonSpec:
    return build_skeleton(config.data.skeleton)


def get_engine(config: ExperimentConfig, checkpoint: str | None = None) -> LiftEngine:
    """체크포인트가 있으면 복원, 없으면 설정으로 새 엔진 생성"""
    if checkpoint:
        return LiftEngine.load(checkpoint)
    return LiftEngine.create(config.denoiser, config.train, get_skeleton(config), config.data.L)
