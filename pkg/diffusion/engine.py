"""
diffusion/engine.py - LiftEngine 클래스

Mixin 기반 상속으로 학습/샘플링을 조합하는 최종 엔진 클래스.
체크포인트 저장/복원(학습 재개 포함)도 여기서 담당한다.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

try:
    from ..pose.skeleton import SkeletonSpec
    from ..schema.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
    from ._types import DenoiserConfig, TrainConfig
    from .denoiser import DenoiserModel
    from .sampler import SamplerMixin
    from .schedule import DiffusionSchedule, build_schedule, signal_to_noise
    from .trainer import AdamOptimizer, TrainerMixin
except ImportError:
    from pose.skeleton import SkeletonSpec
    from schema.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
    from diffusion._types import DenoiserConfig, TrainConfig
    from diffusion.denoiser import DenoiserModel
    from diffusion.sampler import SamplerMixin
    from diffusion.schedule import DiffusionSchedule, build_schedule, signal_to_noise
    from diffusion.trainer import AdamOptimizer, TrainerMixin

logger = logging.getLogger(__name__)


class LiftEngine(TrainerMixin, SamplerMixin):
    """2D → 3D 리프팅 확산 엔진"""

    def __init__(
        self,
        model: DenoiserModel,
        schedule: DiffusionSchedule,
        skeleton: SkeletonSpec,
        train_config: TrainConfig | None = None,
        optimizer: AdamOptimizer | None = None,
        rng: np.random.Generator | None = None,
        epoch: int = 0,
    ):
        if model.J != skeleton.J:
            raise ValueError(f"model J={model.J} != skeleton J={skeleton.J}")
        self.model = model
        self.schedule = schedule
        self.skeleton = skeleton
        self.train_config = train_config or TrainConfig(T=schedule.T)
        self.optimizer = optimizer or AdamOptimizer(**self.train_config.adam)
        self.rng = rng if rng is not None else np.random.default_rng(self.train_config.seed)
        self.epoch = int(epoch)
        self.last_checkpoint: str | None = None

    @classmethod
    def create(cls, denoiser_config: DenoiserConfig, train_config: TrainConfig,
               skeleton: SkeletonSpec, L: int) -> "LiftEngine":
        """새 모델 + 스케줄로 엔진 생성 (epoch 0)"""
        train_config.validate()
        schedule = build_schedule(train_config.schedule_kind, train_config.T,
                                  train_config.beta_start, train_config.beta_end)
        snr = signal_to_noise(schedule)
        logger.info(f"스케줄 {schedule.kind} T={schedule.T}: SNR {snr[0]:.3e} → {snr[-1]:.3e}")
        model = DenoiserModel(denoiser_config, skeleton.J, L)
        logger.info(f"모델 생성: {model.n_params} params, dtype={model.dtype}")
        return cls(model, schedule, skeleton, train_config)

    @property
    def lr(self) -> float:
        """다음 에폭에 쓸 학습률"""
        return self.train_config.lr_at(self.epoch)

    # =========================================================================
    # 체크포인트
    # =========================================================================

    def to_checkpoint(self) -> Checkpoint:
        return Checkpoint(
            params={k: v.copy() for k, v in self.model.params.items()},
            schedule=self.schedule.to_arrays(),
            denoiser_config=self.model.config.to_dict(),
            train_config=self.train_config.to_dict(),
            skeleton=self.skeleton.to_dict(),
            optimizer_step=self.optimizer.step_count,
            optimizer_m={k: v.copy() for k, v in self.optimizer.m.items()},
            optimizer_v={k: v.copy() for k, v in self.optimizer.v.items()},
            epoch=self.epoch,
            lr=self.lr,
            rng_state=self.rng.bit_generator.state,
            extra={"J": self.model.J, "L": self.model.L, "schedule_kind": self.schedule.kind},
        )

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "LiftEngine":
        """외부 기본값 없이 체크포인트만으로 복원"""
        denoiser_config = DenoiserConfig.from_dict(ckpt.denoiser_config)
        train_config = TrainConfig.from_dict(ckpt.train_config)
        skeleton = SkeletonSpec.from_dict(ckpt.skeleton)
        schedule = DiffusionSchedule.from_arrays(ckpt.schedule, kind=ckpt.extra.get("schedule_kind", "custom"))
        model = DenoiserModel(denoiser_config, ckpt.extra["J"], ckpt.extra["L"], params=ckpt.params)
        optimizer = AdamOptimizer(
            **train_config.adam,
            m=ckpt.optimizer_m,
            v=ckpt.optimizer_v,
            step_count=ckpt.optimizer_step,
        )
        rng = np.random.default_rng()
        if ckpt.rng_state:
            rng.bit_generator.state = ckpt.rng_state
        else:
            rng = np.random.default_rng(train_config.seed)
        return cls(model, schedule, skeleton, train_config, optimizer, rng, epoch=ckpt.epoch)

    @classmethod
    def load(cls, path: str | Path) -> "LiftEngine":
        engine = cls.from_checkpoint(load_checkpoint(path))
        engine.last_checkpoint = str(path)
        logger.info(f"체크포인트 로드: {path} (epoch {engine.epoch})")
        return engine
