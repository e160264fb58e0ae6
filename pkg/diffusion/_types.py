"""
diffusion/_types.py - 확산 엔진 공유 설정/결과 타입

LiftEngine 및 Mixin들이 공유하는 dataclass 정의.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

try:
    from ..config import (
        ADAM_DEFAULTS, DENOISER_DEFAULTS, SAMPLER_DEFAULTS,
        SAMPLER_VARIANTS, SCHEDULE_DEFAULTS, TRAIN_DEFAULTS,
    )
    from ..errors import ConfigError
except ImportError:
    from config import (
        ADAM_DEFAULTS, DENOISER_DEFAULTS, SAMPLER_DEFAULTS,
        SAMPLER_VARIANTS, SCHEDULE_DEFAULTS, TRAIN_DEFAULTS,
    )
    from errors import ConfigError

CHANNEL_TOKEN_MODES = ("flatten", "per_joint")
CONDITIONING_MODES = ("both", "pose", "context")
PARAM_DTYPES = ("float32", "float64")


class ConfigSection:
    """dataclass ↔ dict (알 수 없는 키는 ConfigError)"""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
        return cls(**data)


@dataclass
class DenoiserConfig(ConfigSection):
    """노이즈 예측 네트워크 하이퍼파라미터

    channel_tokens: "flatten" = 채널 토큰 크기 J·d, "per_joint" = 관절별 배치 (토큰 크기 d)
    conditioning: "both" | "pose" (컨텍스트 채널 0) | "context" (포즈 채널 0)
    """
    d: int = DENOISER_DEFAULTS["d"]
    heads: int = DENOISER_DEFAULTS["heads"]
    n_p2c: int = DENOISER_DEFAULTS["n_p2c"]
    n_j2j: int = DENOISER_DEFAULTS["n_j2j"]
    ffn_mult: int = DENOISER_DEFAULTS["ffn_mult"]
    channel_tokens: str = DENOISER_DEFAULTS["channel_tokens"]
    conditioning: str = DENOISER_DEFAULTS["conditioning"]
    init_seed: int = DENOISER_DEFAULTS["init_seed"]
    dtype: str = "float32"

    def validate(self) -> None:
        for name in ("d", "heads", "ffn_mult"):
            if getattr(self, name) < 1:
                raise ConfigError(f"denoiser.{name} must be >= 1, got {getattr(self, name)}")
        for name in ("n_p2c", "n_j2j"):
            if getattr(self, name) < 0:
                raise ConfigError(f"denoiser.{name} must be >= 0, got {getattr(self, name)}")
        if self.channel_tokens not in CHANNEL_TOKEN_MODES:
            raise ConfigError(f"denoiser.channel_tokens must be one of {CHANNEL_TOKEN_MODES}, got {self.channel_tokens}")
        if self.conditioning not in CONDITIONING_MODES:
            raise ConfigError(f"denoiser.conditioning must be one of {CONDITIONING_MODES}, got {self.conditioning}")
        if self.dtype not in PARAM_DTYPES:
            raise ConfigError(f"denoiser.dtype must be one of {PARAM_DTYPES}, got {self.dtype}")


@dataclass
class TrainConfig(ConfigSection):
    """학습 루프 + 확산 스케줄 설정 (체크포인트에 그대로 저장)"""
    batch_size: int = TRAIN_DEFAULTS["batch_size"]
    epochs: int = TRAIN_DEFAULTS["epochs"]
    lr_start: float = TRAIN_DEFAULTS["lr_start"]
    lr_decay_factor: float = TRAIN_DEFAULTS["lr_decay_factor"]
    flip_prob: float = TRAIN_DEFAULTS["flip_prob"]
    clip_grad_norm: float | None = TRAIN_DEFAULTS["clip_grad_norm"]
    seed: int = 0
    schedule_kind: str = SCHEDULE_DEFAULTS["kind"]
    T: int = SCHEDULE_DEFAULTS["T"]
    beta_start: float = SCHEDULE_DEFAULTS["beta_start"]
    beta_end: float = SCHEDULE_DEFAULTS["beta_end"]
    adam: dict = field(default_factory=lambda: dict(ADAM_DEFAULTS))

    def validate(self) -> None:
        # lr_start = 0은 허용 (파라미터 불변 학습)
        if self.lr_start < 0:
            raise ConfigError(f"train.lr_start must be >= 0, got {self.lr_start}")
        if not 0 < self.lr_decay_factor <= 1:
            raise ConfigError(f"train.lr_decay_factor must be in (0, 1], got {self.lr_decay_factor}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"train.epochs must be >= 0, got {self.epochs}")
        if not 0 <= self.flip_prob <= 1:
            raise ConfigError(f"train.flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.clip_grad_norm is not None and self.clip_grad_norm <= 0:
            raise ConfigError(f"train.clip_grad_norm must be positive, got {self.clip_grad_norm}")
        if self.T < 1:
            raise ConfigError(f"train.T must be >= 1, got {self.T}")
        if self.schedule_kind == "linear" and not 0 < self.beta_start <= self.beta_end < 1:
            raise ConfigError(
                f"train: need 0 < beta_start <= beta_end < 1, got ({self.beta_start}, {self.beta_end})"
            )
        missing = set(ADAM_DEFAULTS) - set(self.adam)
        if missing:
            raise ConfigError(f"train.adam missing keys {sorted(missing)}")

    def lr_at(self, epoch: int) -> float:
        """epoch e의 학습률 = lr_start · decay^e (누적 곱 대신 직접 계산)"""
        return self.lr_start * self.lr_decay_factor ** epoch


@dataclass
class SamplerConfig(ConfigSection):
    H: int = SAMPLER_DEFAULTS["H"]
    K: int = SAMPLER_DEFAULTS["K"]
    variant: str = SAMPLER_DEFAULTS["variant"]
    seed: int = 0

    def validate(self, T: int | None = None) -> None:
        if self.H < 1:
            raise ConfigError(f"sampler.H must be >= 1, got {self.H}")
        if self.K < 1:
            raise ConfigError(f"sampler.K must be >= 1, got {self.K}")
        if T is not None and self.K > T:
            raise ConfigError(f"sampler.K={self.K} exceeds T={T}")
        if self.variant not in SAMPLER_VARIANTS:
            raise ConfigError(f"sampler.variant must be one of {SAMPLER_VARIANTS}, got {self.variant}")


@dataclass
class EpochMetrics:
    """train_epoch 결과"""
    epoch: int
    mean_loss: float
    lr: float
    n_batches: int
    max_grad_norm: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BackwardResult:
    """역전파 결과: 파라미터 그래디언트 + (선택) 입력 그래디언트"""
    params: dict
    y_t: object = None
    features: object = None
