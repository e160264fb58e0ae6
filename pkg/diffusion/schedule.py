"""
diffusion/schedule.py - 확산 스케줄 & 닫힌형 forward 과정

배열은 t = 1..T를 0-based 인덱스 t-1로 저장. t = 0은 깨끗한 데이터 (ᾱ_0 := 1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

try:
    from ..config import ALPHA_BAR_TERMINAL_WARN
    from ..errors import ConfigError
    from ..pose._types import frozen_array
except ImportError:
    from config import ALPHA_BAR_TERMINAL_WARN
    from errors import ConfigError
    from pose._types import frozen_array

logger = logging.getLogger(__name__)

COSINE_OFFSET = 0.008
COSINE_MAX_BETA = 0.999


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    kind: str
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    posterior_betas: np.ndarray

    @property
    def T(self) -> int:
        return len(self.betas)

    def alpha_bar_at(self, t) -> np.ndarray:
        """ᾱ_t (t = 0이면 1). t는 스칼라 또는 정수 배열"""
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t > self.T):
            raise ValueError(f"timestep outside [0, {self.T}]: {t}")
        padded = np.concatenate([[1.0], self.alpha_bars])
        return padded[t]

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "betas": np.array(self.betas),
            "alphas": np.array(self.alphas),
            "alpha_bars": np.array(self.alpha_bars),
            "posterior_betas": np.array(self.posterior_betas),
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], kind: str = "custom") -> "DiffusionSchedule":
        """체크포인트의 명시적 배열로 복원 (빌더 기본값과 무관)"""
        return cls(
            kind=kind,
            betas=frozen_array(arrays["betas"]),
            alphas=frozen_array(arrays["alphas"]),
            alpha_bars=frozen_array(arrays["alpha_bars"]),
            posterior_betas=frozen_array(arrays["posterior_betas"]),
        )


def _cosine_betas(T: int) -> np.ndarray:
    steps = np.arange(T + 1, dtype=np.float64) / T
    f = np.cos((steps + COSINE_OFFSET) / (1 + COSINE_OFFSET) * math.pi / 2) ** 2
    alpha_bars = f / f[0]
    return np.clip(1.0 - alpha_bars[1:] / alpha_bars[:-1], 1e-12, COSINE_MAX_BETA)


def build_schedule(
    kind: str = "linear",
    T: int = 1000,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
) -> DiffusionSchedule:
    """β 스케줄과 파생 배열 생성

    β̃_t = (1 − ᾱ_{t−1}) / (1 − ᾱ_t) · β_t (t ≥ 2), β̃_1 = β_1.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ConfigError(f"T must be a positive integer, got {T}")
    if kind == "linear":
        if not 0 < beta_start <= beta_end < 1:
            raise ConfigError(f"linear schedule needs 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    elif kind == "cosine":
        betas = _cosine_betas(int(T))
    else:
        raise ConfigError(f"unknown schedule kind: {kind} (linear | cosine)")

    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    posterior = betas.copy()
    if T > 1:
        posterior[1:] = (1.0 - alpha_bars[:-1]) / (1.0 - alpha_bars[1:]) * betas[1:]

    if not (np.all(np.isfinite(alpha_bars)) and np.all(np.diff(alpha_bars) < 0)):
        raise ConfigError("alpha_bar must be finite and strictly decreasing")
    if alpha_bars[-1] > ALPHA_BAR_TERMINAL_WARN:
        logger.warning(
            f"ᾱ_T = {alpha_bars[-1]:.3e} > {ALPHA_BAR_TERMINAL_WARN:g}: "
            f"terminal distribution is not close to a unit Gaussian"
        )

    return DiffusionSchedule(
        kind=kind,
        betas=frozen_array(betas),
        alphas=frozen_array(alphas),
        alpha_bars=frozen_array(alpha_bars),
        posterior_betas=frozen_array(posterior),
    )


def _check_t(schedule: DiffusionSchedule, t, low: int = 1) -> np.ndarray:
    t = np.asarray(t)
    if not np.issubdtype(t.dtype, np.integer):
        raise ValueError(f"timestep must be integer, got {t.dtype}")
    if np.any(t < low) or np.any(t > schedule.T):
        raise ValueError(f"timestep outside [{low}, {schedule.T}]: {t}")
    return t


def _expand(coef: np.ndarray, like: np.ndarray) -> np.ndarray:
    """(B,) 계수를 (B, 1, 1, ...)로 브로드캐스트"""
    coef = np.asarray(coef, dtype=np.float64)
    return coef.reshape(coef.shape + (1,) * (like.ndim - coef.ndim))


def forward_sample(schedule: DiffusionSchedule, y0: np.ndarray, t, eps: np.ndarray) -> np.ndarray:
    """y_t = √ᾱ_t · y0 + √(1−ᾱ_t) · eps

    t가 (B,) 배열이면 y0/eps의 선두 축이 배치.
    """
    t = _check_t(schedule, t)
    y0 = np.asarray(y0)
    ab = _expand(schedule.alpha_bars[t - 1], y0)
    return (np.sqrt(ab) * y0 + np.sqrt(1.0 - ab) * eps).astype(np.result_type(y0, eps), copy=False)


def forward_step(schedule: DiffusionSchedule, y_prev: np.ndarray, t: int, eps: np.ndarray) -> np.ndarray:
    """단일 마르코프 전이 q(y_t | y_{t−1}): √α_t · y_{t−1} + √β_t · eps"""
    t = int(_check_t(schedule, t))
    return math.sqrt(schedule.alphas[t - 1]) * y_prev + math.sqrt(schedule.betas[t - 1]) * eps


def posterior_coefficients(schedule: DiffusionSchedule, t: int) -> tuple[float, float]:
    """μ̃_t의 (y0 계수, y_t 계수)"""
    t = int(_check_t(schedule, t))
    ab = schedule.alpha_bars[t - 1]
    ab_prev = 1.0 if t == 1 else schedule.alpha_bars[t - 2]
    beta = schedule.betas[t - 1]
    coef_y0 = math.sqrt(ab_prev) * beta / (1.0 - ab)
    coef_yt = math.sqrt(schedule.alphas[t - 1]) * (1.0 - ab_prev) / (1.0 - ab)
    return coef_y0, coef_yt


def posterior_params(schedule: DiffusionSchedule, y_t: np.ndarray, y0: np.ndarray, t: int) -> tuple[np.ndarray, float]:
    """q(y_{t−1} | y_t, y0) = N(μ̃_t, β̃_t I)

    t = 1은 ᾱ_0 := 1 규약으로 μ̃_1 = y0, β̃_1 = β_1.
    """
    coef_y0, coef_yt = posterior_coefficients(schedule, t)
    mean = coef_y0 * np.asarray(y0) + coef_yt * np.asarray(y_t)
    return mean, float(schedule.posterior_betas[int(t) - 1])


def spacing(T: int, K: int) -> list[int]:
    """역과정 K개 시점: t_k = round(T·(K−k)/K), k = 0..K−1 (반올림 half-up)

    t_0 = T, 엄격한 감소 보장 (반올림 충돌 시 중복 제거).
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > T:
        raise ValueError(f"K={K} exceeds T={T}")
    raw = [(2 * T * (K - k) + K) // (2 * K) for k in range(K)]
    steps: list[int] = []
    for t in raw:
        if not steps or t < steps[-1]:
            steps.append(int(t))
    if len(steps) != K:
        logger.warning(f"spacing(T={T}, K={K}): {K - len(steps)} duplicate timesteps removed")
    return steps


def signal_to_noise(schedule: DiffusionSchedule) -> np.ndarray:
    """t별 SNR = ᾱ_t / (1 − ᾱ_t)"""
    return schedule.alpha_bars / (1.0 - schedule.alpha_bars)
