"""
diffusion/sampler.py - 다중 가설 역확산 샘플러

프레임당 H개 단위 가우시안 초기값 → spacing(T, K) 시점을 따라 K번 역과정.
H개 가설은 하나의 배치로 같은 조건 F를 공유한다.

variant:
  ddim    : 결정적 DDIM (η = 0), ᾱ_0 := 1 이라 마지막 스텝은 ŷ₀
  literal : y_{t_next} = y_t − ε̂ (계수 재스케일 없음)
"""
from __future__ import annotations

import logging
import math

import numpy as np
from tqdm import tqdm

try:
    from ..config import COORD_SCALE, SAMPLER_VARIANTS
    from ..errors import ConfigError, NumericalError
    from ..pose._types import HypothesisSet, PoseSample
    from ._helpers import frame_seed, hypothesis_rng
    from .schedule import DiffusionSchedule, spacing
except ImportError:
    from config import COORD_SCALE, SAMPLER_VARIANTS
    from errors import ConfigError, NumericalError
    from pose._types import HypothesisSet, PoseSample
    from diffusion._helpers import frame_seed, hypothesis_rng
    from diffusion.schedule import DiffusionSchedule, spacing

logger = logging.getLogger(__name__)


def init_hypotheses(H: int, J: int, seed: int, hypothesis_seeds: list[int] | None = None) -> np.ndarray:
    """H개 독립 N(0, I) J×3 초기값

    가설 h는 자기 RNG 스트림에서 뽑는다. hypothesis_seeds를 주면 h번째 스트림 시드를
    직접 지정 (같은 시드 → 같은 초기값).
    """
    if H < 1:
        raise ValueError(f"H must be >= 1, got {H}")
    if hypothesis_seeds is not None:
        if len(hypothesis_seeds) != H:
            raise ValueError(f"expected {H} hypothesis seeds, got {len(hypothesis_seeds)}")
        streams = [np.random.default_rng(int(s)) for s in hypothesis_seeds]
    else:
        streams = [hypothesis_rng(seed, h) for h in range(H)]
    return np.stack([rng.standard_normal((J, 3)) for rng in streams])


def ddim_step(model, schedule: DiffusionSchedule, y_t: np.ndarray, t_cur: int, t_next: int, F,
              variant: str = "ddim") -> tuple[np.ndarray, np.ndarray]:
    """역과정 한 스텝. 반환: (y_{t_next}, ŷ₀)

    ε̂는 t_cur의 타임스텝 임베딩으로 매 스텝 다시 계산한다.
    literal 변형의 ŷ₀는 참고용 DDIM 추정치.
    """
    if not 1 <= t_cur <= schedule.T:
        raise ValueError(f"t_cur={t_cur} outside [1, {schedule.T}]")
    if not 0 <= t_next < t_cur:
        raise ValueError(f"t_next={t_next} must satisfy 0 <= t_next < t_cur={t_cur}")
    if variant not in SAMPLER_VARIANTS:
        raise ConfigError(f"unknown sampler variant: {variant}")

    y_t = np.asarray(y_t, dtype=np.float64)
    eps_hat = np.asarray(model.predict_noise(y_t, F, t_cur), dtype=np.float64)
    ab_cur = float(schedule.alpha_bar_at(t_cur))
    ab_next = float(schedule.alpha_bar_at(t_next))
    y0_hat = (y_t - math.sqrt(1.0 - ab_cur) * eps_hat) / math.sqrt(ab_cur)

    if variant == "ddim":
        y_next = math.sqrt(ab_next) * y0_hat + math.sqrt(1.0 - ab_next) * eps_hat
    else:
        y_next = y_t - eps_hat

    if not np.all(np.isfinite(y_next)):
        raise NumericalError(f"non-finite state after step {t_cur} → {t_next}", "ddim")
    return y_next, y0_hat


def sample_hypotheses(
    model,
    schedule: DiffusionSchedule,
    F,
    H: int,
    K: int,
    seed: int,
    variant: str = "ddim",
    *,
    frame_id: str = "frame",
    action_tag: str | None = None,
    hypothesis_seeds: list[int] | None = None,
    return_trajectory: bool = False,
):
    """한 프레임의 HypothesisSet (mm, 루트 상대)

    return_trajectory=True면 (HypothesisSet, 궤적 (K+1, H, J, 3) mm)을 반환.
    궤적[0]은 초기 노이즈, 궤적[k]는 k번째 스텝 뒤 상태.
    """
    if K > schedule.T:
        raise ConfigError(f"K={K} exceeds T={schedule.T}")
    steps = spacing(schedule.T, K)
    y = init_hypotheses(H, model.J, seed, hypothesis_seeds)
    trajectory = [y.copy()] if return_trajectory else None

    for k, t_cur in enumerate(steps):
        t_next = steps[k + 1] if k + 1 < len(steps) else 0
        y, _ = ddim_step(model, schedule, y, t_cur, t_next, F, variant)
        if return_trajectory:
            trajectory.append(y.copy())

    poses = y * COORD_SCALE
    poses = poses - poses[:, :1]
    config = {"H": H, "K": K, "T": schedule.T, "variant": variant, "seed": int(seed)}
    hs = HypothesisSet(frame_id=frame_id, hypotheses=poses, sampler_config=config, action_tag=action_tag)
    if return_trajectory:
        return hs, np.stack(trajectory) * COORD_SCALE
    return hs


def sample_dataset(
    model,
    schedule: DiffusionSchedule,
    dataset: list[PoseSample],
    H: int,
    K: int,
    seed: int,
    variant: str = "ddim",
    progress: bool = False,
) -> list[HypothesisSet]:
    """프레임 i는 시드 derive(seed, i)로 샘플링 (프레임 순서/분할과 무관하게 재현)"""
    sets = []
    for i, sample in enumerate(tqdm(dataset, desc="sample", disable=not progress)):
        sets.append(sample_hypotheses(
            model, schedule, sample.features, H, K, frame_seed(seed, i), variant,
            frame_id=sample.sample_id, action_tag=sample.action_tag,
        ))
    logger.info(f"샘플링 완료: {len(sets)} frames × H={H}, K={K}, variant={variant}")
    return sets


class SamplerMixin:
    """추론 관련 메서드 (LiftEngine에 조합). 필요 속성: model, schedule"""

    def ddim_step(self, y_t, t_cur: int, t_next: int, F, variant: str = "ddim"):
        return ddim_step(self.model, self.schedule, y_t, t_cur, t_next, F, variant)

    def sample_hypotheses(self, F, H: int, K: int, seed: int, variant: str = "ddim", **kwargs):
        return sample_hypotheses(self.model, self.schedule, F, H, K, seed, variant, **kwargs)

    def sample_dataset(self, dataset: list[PoseSample], H: int, K: int, seed: int,
                       variant: str = "ddim", progress: bool = False) -> list[HypothesisSet]:
        return sample_dataset(self.model, self.schedule, dataset, H, K, seed, variant, progress)


__all__ = ["SamplerMixin", "init_hypotheses", "ddim_step", "sample_hypotheses", "sample_dataset"]
