"""
test_sampler.py - 다중 가설 역확산 샘플러 테스트

1. 가설 초기값 (결정성, 분포, 프리픽스 시딩)
2. DDIM 한 스텝 / 전체 체인의 참 노이즈 오라클 역변환
3. literal 변형
4. HypothesisSet 계약 (루트 상대 mm, 설정 스냅샷, 궤적)

실행: python test_sampler.py
"""

from __future__ import annotations

import sys

import numpy as np

from config import COORD_SCALE
from diffusion import DenoiserConfig, LiftEngine, TrainConfig, build_schedule, forward_sample, spacing
from diffusion._helpers import frame_seed
from diffusion.sampler import ddim_step, init_hypotheses, sample_dataset, sample_hypotheses
from errors import ConfigError, NumericalError
from pose import Camera, build_skeleton, generate_synthetic_dataset
from testkit import collect_tests, run_table

SKELETON = build_skeleton("desk8")


class _Oracle:
    """forward_sample에 쓴 참 노이즈를 그대로 예측하는 모델"""

    def __init__(self, eps: np.ndarray):
        self.eps = eps
        self.J = eps.shape[-2]

    def predict_noise(self, y_t, F, t):
        return np.broadcast_to(self.eps, np.shape(y_t))


def _engine(T: int = 40) -> LiftEngine:
    denoiser = DenoiserConfig(d=8, heads=2, n_p2c=1, n_j2j=1, init_seed=3, dtype="float64")
    train = TrainConfig(T=T, beta_end=0.2, seed=0)
    return LiftEngine.create(denoiser, train, SKELETON, L=1)


def _features(n: int = 1):
    data = generate_synthetic_dataset(SKELETON, n, Camera(), 0.0, 5, L=1, d=8)
    return data


# ===========================================================================
# 초기값
# ===========================================================================

def test_init_deterministic():
    assert np.array_equal(init_hypotheses(4, 8, 9), init_hypotheses(4, 8, 9))
    assert not np.array_equal(init_hypotheses(4, 8, 9), init_hypotheses(4, 8, 10))


def test_init_unit_gaussian():
    x = init_hypotheses(10_000, 8, 0)
    assert x.shape == (10_000, 8, 3)
    # 전체 240000개: 평균 표준오차 약 0.002
    assert abs(x.mean()) < 0.01, f"pooled mean {x.mean():.4f}"
    assert abs(x.std() - 1.0) < 0.01, f"pooled std {x.std():.4f}"
    # 좌표별 10000개: 5σ 이상 여유
    assert np.all(np.abs(x.mean(axis=0)) < 0.05), f"max |mean| {np.abs(x.mean(axis=0)).max():.4f}"
    assert np.all(np.abs(x.std(axis=0) - 1.0) < 0.04), f"max |std-1| {np.abs(x.std(axis=0) - 1).max():.4f}"


def test_init_prefix_seeding():
    assert np.array_equal(init_hypotheses(6, 8, 2)[:3], init_hypotheses(3, 8, 2))


def test_init_explicit_seeds():
    x = init_hypotheses(2, 8, 0, hypothesis_seeds=[11, 11])
    assert np.array_equal(x[0], x[1])
    try:
        init_hypotheses(2, 8, 0, hypothesis_seeds=[1])
    except ValueError:
        return
    assert False, "seed count mismatch should raise ValueError"


# ===========================================================================
# DDIM 스텝
# ===========================================================================

def test_ddim_oracle_single_step_recovers_clean_pose():
    s = build_schedule()
    rng = np.random.default_rng(1)
    y0 = rng.standard_normal((8, 3)) * 0.3
    eps = rng.standard_normal((8, 3))
    for t in (1, 50, 500, 1000):
        y_t = forward_sample(s, y0, t, eps)
        y_next, y0_hat = ddim_step(_Oracle(eps), s, y_t, t, 0, None)
        rel = np.linalg.norm(y_next - y0) / np.linalg.norm(y0)
        assert rel < 1e-5, f"t={t}: relative error {rel:.2e}"
        assert np.allclose(y_next, y0_hat)


def test_ddim_oracle_full_chain():
    s = build_schedule()
    rng = np.random.default_rng(2)
    for trial in range(100):
        y0 = rng.standard_normal((8, 3)) * 0.3
        eps = rng.standard_normal((8, 3))
        for K in (1, 20, 50) if trial < 5 else (20,):
            steps = spacing(s.T, K)
            y = forward_sample(s, y0, s.T, eps)
            for k, t_cur in enumerate(steps):
                t_next = steps[k + 1] if k + 1 < len(steps) else 0
                y, _ = ddim_step(_Oracle(eps), s, y, t_cur, t_next, None)
            rel = np.linalg.norm(y - y0) / np.linalg.norm(y0)
            assert rel < 1e-4, f"trial {trial}, K={K}: relative error {rel:.2e}"


def test_ddim_intermediate_state_on_forward_marginal():
    s = build_schedule()
    rng = np.random.default_rng(3)
    y0, eps = rng.standard_normal((8, 3)), rng.standard_normal((8, 3))
    y_next, _ = ddim_step(_Oracle(eps), s, forward_sample(s, y0, 800, eps), 800, 400, None)
    assert np.allclose(y_next, forward_sample(s, y0, 400, eps), atol=1e-10)


def test_literal_zero_noise_is_identity():
    s = build_schedule()
    y = np.random.default_rng(4).standard_normal((2, 8, 3))
    y_next, _ = ddim_step(_Oracle(np.zeros((8, 3))), s, y, 100, 50, None, variant="literal")
    assert np.array_equal(y_next, y)


def test_literal_subtracts_prediction():
    s = build_schedule()
    eps = np.full((8, 3), 0.25)
    y = np.ones((8, 3))
    y_next, _ = ddim_step(_Oracle(eps), s, y, 10, 5, None, variant="literal")
    assert np.array_equal(y_next, np.full((8, 3), 0.75))


def test_ddim_step_argument_checks():
    s = build_schedule(T=100)
    oracle = _Oracle(np.zeros((8, 3)))
    for t_cur, t_next in ((50, 50), (50, 60), (0, 0), (101, 5)):
        try:
            ddim_step(oracle, s, np.zeros((8, 3)), t_cur, t_next, None)
        except ValueError:
            continue
        assert False, f"({t_cur}, {t_next}) should raise ValueError"
    try:
        ddim_step(oracle, s, np.zeros((8, 3)), 10, 5, None, variant="ddpm")
    except ConfigError:
        return
    assert False, "unknown variant should raise ConfigError"


def test_ddim_non_finite_state():
    s = build_schedule(T=100)
    try:
        ddim_step(_Oracle(np.full((8, 3), np.inf)), s, np.zeros((8, 3)), 10, 5, None)
    except NumericalError as e:
        assert e.stage == "ddim"
        return
    assert False, "infinite prediction should raise NumericalError"


# ===========================================================================
# 가설 세트
# ===========================================================================

def test_hypothesis_set_contract():
    engine = _engine()
    (s,) = _features()
    hs = engine.sample_hypotheses(s.features, 4, 5, seed=7, frame_id=s.sample_id, action_tag=s.action_tag)
    assert hs.hypotheses.shape == (4, 8, 3)
    assert np.all(hs.hypotheses[:, 0] == 0.0), "hypotheses must be root-relative"
    assert hs.sampler_config == {"H": 4, "K": 5, "T": 40, "variant": "ddim", "seed": 7}
    assert hs.frame_id == s.sample_id and hs.action_tag == s.action_tag


def test_sampling_deterministic():
    engine = _engine()
    (s,) = _features()
    a = engine.sample_hypotheses(s.features, 3, 4, seed=1)
    b = engine.sample_hypotheses(s.features, 3, 4, seed=1)
    assert np.array_equal(a.hypotheses, b.hypotheses)


def test_single_hypothesis():
    engine = _engine()
    (s,) = _features()
    hs = engine.sample_hypotheses(s.features, 1, 4, seed=1)
    assert hs.H == 1 and np.all(np.isfinite(hs.hypotheses))


def test_equal_hypothesis_seeds_give_equal_poses():
    engine = _engine()
    (s,) = _features()
    hs = engine.sample_hypotheses(s.features, 2, 4, seed=0, hypothesis_seeds=[5, 5])
    assert np.allclose(hs.hypotheses[0], hs.hypotheses[1], atol=1e-9)


def test_prefix_of_larger_set_matches_smaller_run():
    engine = _engine()
    (s,) = _features()
    big = engine.sample_hypotheses(s.features, 6, 4, seed=3)
    small = engine.sample_hypotheses(s.features, 2, 4, seed=3)
    assert np.allclose(big.prefix(2).hypotheses, small.hypotheses, atol=1e-6)


def test_trajectory():
    engine = _engine()
    (s,) = _features()
    hs, traj = engine.sample_hypotheses(s.features, 3, 5, seed=2, return_trajectory=True)
    assert traj.shape == (6, 3, 8, 3)
    assert np.allclose(traj[0], init_hypotheses(3, 8, 2) * COORD_SCALE)
    assert np.allclose(traj[-1] - traj[-1][:, :1], hs.hypotheses)


def test_k_larger_than_t():
    engine = _engine(T=10)
    (s,) = _features()
    try:
        engine.sample_hypotheses(s.features, 2, 11, seed=0)
    except ConfigError:
        return
    assert False, "K > T should raise ConfigError"


def test_dataset_sampling_uses_frame_seeds():
    engine = _engine()
    data = _features(n=3)
    sets = sample_dataset(engine.model, engine.schedule, data, 2, 3, seed=4)
    assert [hs.frame_id for hs in sets] == [s.sample_id for s in data]
    direct = sample_hypotheses(engine.model, engine.schedule, data[2].features, 2, 3, frame_seed(4, 2))
    assert np.array_equal(sets[2].hypotheses, direct.hypotheses)


def run_all_tests() -> bool:
    return run_table("샘플러 테스트", collect_tests(globals()), verbose="--verbose" in sys.argv)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
