"""
evaluation/aggregate.py - 다중 가설 집계 & 분산 기반 신뢰도

전략:
  A      : 좌표별 평균
  M      : 좌표별 중앙값 (짝수 H는 가운데 두 값의 평균)
  R      : 시드 기반 무작위 선택
  B      : 정답 대비 MPJPE 최소 가설 (오라클)
  Bjoint : 관절별 최근접 가설 (선택 방식의 하한)

신뢰도 = 3·J 좌표별 불편분산(H−1)의 평균. 낮을수록 신뢰도 높음. H < 2면 None.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

try:
    from ..config import AGGREGATION_STRATEGIES
    from ..errors import ConfigError
    from ..pose._types import HypothesisSet
    from .metrics import mpjpe
except ImportError:
    from config import AGGREGATION_STRATEGIES
    from errors import ConfigError
    from pose._types import HypothesisSet
    from evaluation.metrics import mpjpe

logger = logging.getLogger(__name__)

SELECTING_STRATEGIES = ("R", "B")
ORACLE_STRATEGIES = ("B", "Bjoint")


@dataclass
class AggregationResult:
    """집계 결과. chosen_index는 단일 가설을 고르는 전략(R, B)에서만 존재"""
    pose: np.ndarray
    strategy: str
    chosen_index: int | None = None
    confidence: float | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.pose)):
            raise ValueError(f"{self.strategy}: aggregated pose is not finite")
        if (self.chosen_index is not None) != (self.strategy in SELECTING_STRATEGIES):
            raise ValueError(f"{self.strategy}: chosen_index must be set iff the strategy selects one hypothesis")


def _check_gt(hs: HypothesisSet, gt: np.ndarray) -> np.ndarray:
    gt = np.asarray(gt, dtype=np.float64)
    if gt.shape != (hs.J, 3):
        raise ValueError(f"{hs.frame_id}: ground truth shape {gt.shape} != ({hs.J}, 3)")
    return gt


def _deviations(hs: HypothesisSet) -> np.ndarray:
    """첫 가설 기준 편차 (동일 가설이면 정확히 0, 평행이동 불변)"""
    return hs.hypotheses - hs.hypotheses[0]


def aggregate_average(hs: HypothesisSet) -> np.ndarray:
    return hs.hypotheses[0] + _deviations(hs).mean(axis=0)


def aggregate_median(hs: HypothesisSet) -> np.ndarray:
    """3·J 좌표 각각 독립 정렬 후 중앙값"""
    return np.median(hs.hypotheses, axis=0)


def select_random(hs: HypothesisSet, seed: int) -> AggregationResult:
    index = int(np.random.default_rng(seed).integers(hs.H))
    return AggregationResult(hs.hypotheses[index].copy(), "R", chosen_index=index, confidence=confidence(hs))


def select_best(hs: HypothesisSet, gt: np.ndarray) -> AggregationResult:
    gt = _check_gt(hs, gt)
    errors = [mpjpe(h, gt) for h in hs.hypotheses]
    index = int(np.argmin(errors))
    return AggregationResult(hs.hypotheses[index].copy(), "B", chosen_index=index, confidence=confidence(hs))


def select_best_jointwise(hs: HypothesisSet, gt: np.ndarray) -> np.ndarray:
    """관절마다 그 관절 오차가 가장 작은 가설의 좌표"""
    gt = _check_gt(hs, gt)
    errors = np.linalg.norm(hs.hypotheses - gt[None], axis=-1)
    chosen = np.argmin(errors, axis=0)
    return hs.hypotheses[chosen, np.arange(hs.J)].copy()


def confidence(hs: HypothesisSet) -> float | None:
    if hs.H < 2:
        return None
    return float(np.var(_deviations(hs), axis=0, ddof=1).mean())


def joint_spread(hs: HypothesisSet) -> np.ndarray | None:
    """관절별 좌표 분산 평균 (J,). 가설들이 어느 관절에서 갈리는지"""
    if hs.H < 2:
        return None
    return np.var(_deviations(hs), axis=0, ddof=1).mean(axis=-1)


def aggregate(hs: HypothesisSet, strategy: str, gt: np.ndarray | None = None, seed: int = 0) -> AggregationResult:
    """전략 이름으로 집계 (CLI/연구 스크립트 공용)"""
    if strategy not in AGGREGATION_STRATEGIES:
        raise ConfigError(f"unknown strategy: {strategy} (available: {', '.join(AGGREGATION_STRATEGIES)})")
    if strategy in ORACLE_STRATEGIES and gt is None:
        raise ConfigError(f"strategy {strategy} requires ground truth")
    if strategy == "A":
        return AggregationResult(aggregate_average(hs), "A", confidence=confidence(hs))
    if strategy == "M":
        return AggregationResult(aggregate_median(hs), "M", confidence=confidence(hs))
    if strategy == "R":
        return select_random(hs, seed)
    if strategy == "B":
        return select_best(hs, gt)
    return AggregationResult(select_best_jointwise(hs, gt), "Bjoint", confidence=confidence(hs))


# =============================================================================
# 신뢰도 필터링
# =============================================================================

@dataclass
class ConfidenceFilterResult:
    recall: float
    kept_indices: list[int]
    mpjpe_all: float
    mpjpe_kept: float
    score_threshold: float | None
    unscored: int = 0
    frame_errors: list[float] = field(default_factory=list)

    @property
    def improvement(self) -> float:
        return self.mpjpe_all - self.mpjpe_kept


def kept_count(recall: float, n: int) -> int:
    """⌈recall·N⌉ (부동소수 오차 보정)"""
    return min(n, max(1, math.ceil(recall * n - 1e-9)))


def confidence_filter(
    frames: list[tuple[HypothesisSet, np.ndarray]],
    recall: float,
    strategy: str = "A",
    seed: int = 0,
) -> ConfidenceFilterResult:
    """분산 점수가 낮은 ⌈recall·N⌉ 프레임만 남기고 MPJPE 비교

    신뢰도가 없는 프레임 (H < 2)은 가장 낮은 신뢰도로 취급한다.
    """
    if not frames:
        raise ValueError("confidence_filter needs at least one frame")
    if not 0 < recall <= 1:
        raise ConfigError(f"recall must be in (0, 1], got {recall}")

    errors, scores = [], []
    for i, (hs, gt) in enumerate(frames):
        result = aggregate(hs, strategy, gt=gt, seed=seed + i)
        errors.append(mpjpe(result.pose, gt))
        scores.append(math.inf if result.confidence is None else result.confidence)
    unscored = sum(1 for s in scores if s == math.inf)
    if unscored:
        logger.warning(f"신뢰도 없는 프레임 {unscored}개 (H < 2): 필터링 시 최하위로 취급")

    order = np.argsort(np.asarray(scores), kind="stable")
    n_keep = kept_count(recall, len(frames))
    kept = sorted(int(i) for i in order[:n_keep])
    threshold = scores[int(order[n_keep - 1])]
    return ConfidenceFilterResult(
        recall=recall,
        kept_indices=kept,
        mpjpe_all=float(np.mean(errors)),
        mpjpe_kept=float(np.mean([errors[i] for i in kept])),
        score_threshold=None if threshold == math.inf else float(threshold),
        unscored=unscored,
        frame_errors=[float(e) for e in errors],
    )


__all__ = [
    "AggregationResult",
    "ConfidenceFilterResult",
    "aggregate",
    "aggregate_average",
    "aggregate_median",
    "select_random",
    "select_best",
    "select_best_jointwise",
    "confidence",
    "confidence_filter",
    "joint_spread",
    "kept_count",
]
