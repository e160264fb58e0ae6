"""
test_aggregate.py - 가설 집계 & 신뢰도 필터 테스트

1. 평균 / 중앙값 / 무작위 / 오라클 선택 / 관절별 오라클
2. 분산 기반 신뢰도
3. 신뢰도 필터링 (recall)

실행: python test_aggregate.py
"""

from __future__ import annotations

import itertools
import sys

import numpy as np

from errors import ConfigError
from evaluation import (
    aggregate, aggregate_average, aggregate_median, confidence, confidence_filter,
    joint_spread, select_best, select_best_jointwise, select_random,
)
from evaluation.aggregate import AggregationResult, kept_count
from evaluation.metrics import mpjpe
from pose import HypothesisSet
from testkit import collect_tests, run_table


def _hs(hyp, frame_id: str = "f0") -> HypothesisSet:
    return HypothesisSet(frame_id, np.asarray(hyp, dtype=np.float64), {"H": len(hyp)})


def _scalar_set(values) -> HypothesisSet:
    """한 좌표만 다른 값을 갖는 J=1 세트"""
    hyp = np.zeros((len(values), 1, 3))
    hyp[:, 0, 0] = values
    return _hs(hyp)


# ===========================================================================
# 평균 / 중앙값
# ===========================================================================

def test_average_identical_hypotheses():
    pose = np.random.default_rng(0).standard_normal((4, 3)) * 300.0
    avg = aggregate_average(_hs([pose] * 5))
    assert np.array_equal(avg, pose), f"max diff {np.abs(avg - pose).max()}"


def test_average_scalar():
    assert aggregate_average(_scalar_set([1.0, 2.0, 3.0]))[0, 0] == 2.0


def test_median_rejects_outlier():
    assert aggregate_median(_scalar_set([1.0, 2.0, 100.0]))[0, 0] == 2.0


def test_median_even_count():
    assert aggregate_median(_scalar_set([1.0, 2.0, 3.0, 4.0]))[0, 0] == 2.5


def test_median_robust_to_one_corruption():
    rng = np.random.default_rng(1)
    for _ in range(50):
        hyp = rng.standard_normal((5, 6, 3))
        k = int(rng.integers(5))
        hyp[k] = rng.standard_normal((6, 3)) * 1e6
        med = aggregate_median(_hs(hyp))
        others = np.delete(hyp, k, axis=0)
        assert np.all(med >= others.min(axis=0)) and np.all(med <= others.max(axis=0))


def test_median_within_hypothesis_range():
    hyp = np.random.default_rng(2).standard_normal((7, 5, 3))
    med = aggregate_median(_hs(hyp))
    assert np.all(med >= hyp.min(axis=0)) and np.all(med <= hyp.max(axis=0))


def test_average_and_median_follow_translation():
    rng = np.random.default_rng(11)
    for _ in range(20):
        hyp = rng.standard_normal((5, 6, 3)) * 200.0
        shift = rng.standard_normal(3) * 500.0
        moved = _hs(hyp + shift)
        assert np.allclose(aggregate_average(moved), aggregate_average(_hs(hyp)) + shift, atol=1e-9)
        assert np.allclose(aggregate_median(moved), aggregate_median(_hs(hyp)) + shift, atol=1e-9)


def test_median_ignores_hypothesis_order():
    rng = np.random.default_rng(12)
    for _ in range(20):
        hyp = rng.standard_normal((6, 4, 3))
        perm = rng.permutation(6)
        assert np.array_equal(aggregate_median(_hs(hyp[perm])), aggregate_median(_hs(hyp)))


# ===========================================================================
# 선택
# ===========================================================================

def test_best_picks_lowest_error():
    gt = np.zeros((2, 3))
    hyp = [np.full((2, 3), v) / np.sqrt(3) for v in (10.0, 5.0, 20.0)]
    res = select_best(_hs(hyp), gt)
    assert res.chosen_index == 1, f"chosen {res.chosen_index}"
    assert np.isclose(mpjpe(res.pose, gt), 5.0)


def test_singleton_selection():
    pose = np.random.default_rng(3).standard_normal((1, 4, 3))
    hs = _hs(pose)
    assert select_best(hs, np.zeros((4, 3))).chosen_index == 0
    assert select_random(hs, 123).chosen_index == 0
    assert np.array_equal(select_best_jointwise(hs, np.zeros((4, 3))), pose[0])


def test_random_selection_is_seeded():
    hs = _hs(np.random.default_rng(4).standard_normal((10, 3, 3)))
    picks = {select_random(hs, s).chosen_index for s in range(40)}
    assert select_random(hs, 5).chosen_index == select_random(hs, 5).chosen_index
    assert len(picks) > 1 and all(0 <= p < 10 for p in picks)


def test_jointwise_matches_exhaustive_search():
    rng = np.random.default_rng(5)
    for _ in range(20):
        hyp = rng.standard_normal((3, 3, 3))
        gt = rng.standard_normal((3, 3))
        best = min(
            (mpjpe(hyp[list(assign), np.arange(3)], gt), assign)
            for assign in itertools.product(range(3), repeat=3)
        )
        got = select_best_jointwise(_hs(hyp), gt)
        assert np.isclose(mpjpe(got, gt), best[0], atol=1e-12)


def test_jointwise_never_worse_than_best():
    rng = np.random.default_rng(6)
    for _ in range(20):
        hs = _hs(rng.standard_normal((6, 5, 3)))
        gt = rng.standard_normal((5, 3))
        assert mpjpe(select_best_jointwise(hs, gt), gt) <= mpjpe(select_best(hs, gt).pose, gt) + 1e-12


def test_best_no_worse_than_any_hypothesis():
    rng = np.random.default_rng(13)
    for _ in range(30):
        hyp = rng.standard_normal((8, 5, 3)) * 100.0
        gt = rng.standard_normal((5, 3)) * 100.0
        best = mpjpe(select_best(_hs(hyp), gt).pose, gt)
        for i in range(len(hyp)):
            assert best <= mpjpe(hyp[i], gt), f"hypothesis {i} beats oracle pick"


def test_chosen_index_invariant():
    try:
        AggregationResult(np.zeros((2, 3)), "A", chosen_index=0)
    except ValueError:
        pass
    else:
        assert False, "averaging result must not carry chosen_index"
    try:
        AggregationResult(np.zeros((2, 3)), "B")
    except ValueError:
        return
    assert False, "oracle selection must carry chosen_index"


def test_dispatch():
    hs = _hs(np.random.default_rng(7).standard_normal((4, 3, 3)))
    gt = np.zeros((3, 3))
    for strategy in ("A", "M", "R", "B", "Bjoint"):
        res = aggregate(hs, strategy, gt=gt, seed=1)
        assert res.strategy == strategy and res.pose.shape == (3, 3)
        assert (res.chosen_index is not None) == (strategy in ("R", "B"))
    for bad in (dict(strategy="X"), dict(strategy="B"), dict(strategy="Bjoint")):
        try:
            aggregate(hs, **bad)
        except ConfigError:
            continue
        assert False, f"{bad} should raise ConfigError"


# ===========================================================================
# 신뢰도
# ===========================================================================

def test_confidence_identical_is_zero():
    pose = np.random.default_rng(8).standard_normal((4, 3)) * 300.0
    hs = _hs([pose] * 3)
    assert confidence(hs) == 0.0, f"got {confidence(hs)}"
    assert np.all(joint_spread(hs) == 0.0)


def test_confidence_ignores_order_and_translation():
    rng = np.random.default_rng(14)
    for _ in range(20):
        hyp = rng.standard_normal((5, 6, 3)) * 50.0
        base = confidence(_hs(hyp))
        shifted = confidence(_hs(hyp + rng.standard_normal(3) * 1000.0))
        permuted = confidence(_hs(hyp[rng.permutation(5)]))
        assert np.isclose(shifted, base, rtol=1e-9, atol=0.0), f"{shifted} vs {base}"
        assert np.isclose(permuted, base, rtol=1e-9, atol=0.0), f"{permuted} vs {base}"


def test_confidence_unbiased_variance():
    hs = _scalar_set([0.0, 2.0])
    # 좌표 하나만 분산 2, 나머지 0 → 평균 2/3
    assert np.isclose(confidence(hs), 2.0 / 3.0)
    assert np.isclose(np.var(hs.hypotheses[:, 0, 0], ddof=1), 2.0)


def test_confidence_absent_for_single_hypothesis():
    hs = _hs(np.zeros((1, 2, 3)))
    assert confidence(hs) is None
    assert joint_spread(hs) is None
    assert aggregate(hs, "A").confidence is None


def test_joint_spread_localises_disagreement():
    hyp = np.zeros((4, 3, 3))
    hyp[:, 2] = np.random.default_rng(9).standard_normal((4, 3))
    spread = joint_spread(_hs(hyp))
    assert spread[0] == 0.0 and spread[1] == 0.0 and spread[2] > 0


# ===========================================================================
# 신뢰도 필터
# ===========================================================================

def _frames():
    gt = np.zeros((3, 3))
    calm = _hs(np.full((4, 3, 3), 1.0))
    rng = np.random.default_rng(10)
    wild = _hs(rng.standard_normal((4, 3, 3)) * 100.0 + 50.0)
    return [(calm, gt), (wild, gt)]


def test_filter_full_recall():
    res = confidence_filter(_frames(), 1.0)
    assert res.kept_indices == [0, 1]
    assert res.mpjpe_kept == res.mpjpe_all and res.improvement == 0.0


def test_filter_keeps_confident_frame():
    res = confidence_filter(_frames(), 0.5)
    assert res.kept_indices == [0], f"kept {res.kept_indices}"
    assert res.mpjpe_kept < res.mpjpe_all
    assert res.score_threshold == 0.0


def test_filter_unscored_ranked_last():
    gt = np.zeros((3, 3))
    frames = [(_hs(np.ones((1, 3, 3))), gt), (_hs(np.ones((3, 3, 3)) * 9.0), gt)]
    res = confidence_filter(frames, 0.5)
    assert res.kept_indices == [1] and res.unscored == 1


def test_filter_argument_checks():
    for recall in (0.0, 1.5, -0.1):
        try:
            confidence_filter(_frames(), recall)
        except ConfigError:
            continue
        assert False, f"recall {recall} should raise ConfigError"
    try:
        confidence_filter([], 0.5)
    except ValueError:
        return
    assert False, "empty frame list should raise ValueError"


def test_kept_count_rounds_up():
    assert kept_count(0.9, 10) == 9
    assert kept_count(0.95, 10) == 10
    assert kept_count(0.7, 10) == 7
    assert kept_count(0.01, 10) == 1


def run_all_tests() -> bool:
    return run_table("가설 집계 테스트", collect_tests(globals()), verbose="--verbose" in sys.argv)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
