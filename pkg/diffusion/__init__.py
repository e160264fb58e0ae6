"""
diffusion/ - 확산 리프팅 엔진 패키지

LiftEngine: Mixin 기반 (TrainerMixin + SamplerMixin) 학습/샘플링 엔진
"""
from .engine import LiftEngine
from ._types import BackwardResult, DenoiserConfig, EpochMetrics, SamplerConfig, TrainConfig
from .schedule import (
    DiffusionSchedule,
    build_schedule,
    forward_sample,
    posterior_params,
    signal_to_noise,
    spacing,
)
from .denoiser import DenoiserModel, assemble_input, backward, embed_timestep, forward, predict_noise
from .trainer import AdamOptimizer, loss
from .sampler import ddim_step, init_hypotheses, sample_dataset, sample_hypotheses

__all__ = [
    "LiftEngine",
    "BackwardResult",
    "DenoiserConfig",
    "EpochMetrics",
    "SamplerConfig",
    "TrainConfig",
    "DiffusionSchedule",
    "build_schedule",
    "forward_sample",
    "posterior_params",
    "signal_to_noise",
    "spacing",
    "DenoiserModel",
    "assemble_input",
    "backward",
    "embed_timestep",
    "forward",
    "predict_noise",
    "AdamOptimizer",
    "loss",
    "ddim_step",
    "init_hypotheses",
    "sample_dataset",
    "sample_hypotheses",
]
