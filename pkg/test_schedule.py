"""
test_schedule.py - 확산 스케줄 & forward 과정 테스트

1. β/ᾱ/β̃ 손계산 값
2. 닫힌형 forward 샘플 (영 노이즈, 영 신호, 몬테카를로 모멘트)
3. 사후 분포 계수 & 모멘트 일치
4. 역과정 시점 spacing
5. 시드 파생 / 그래디언트 클리핑 헬퍼

실행: python test_schedule.py
"""

from __future__ import annotations

import math
import sys

import numpy as np

from diffusion._helpers import clip_by_global_norm, derive_seed, global_norm, hypothesis_rng
from diffusion.schedule import (
    build_schedule, forward_sample, forward_step, posterior_coefficients,
    posterior_params, signal_to_noise, spacing,
)
from errors import ConfigError
from testkit import collect_tests, run_table


def _constant(T: int = 3, beta: float = 0.1):
    return build_schedule("linear", T, beta, beta)


# ===========================================================================
# 스케줄 빌더
# ===========================================================================

def test_constant_beta_alpha_bars():
    s = _constant()
    assert np.allclose(s.alpha_bars, [0.9, 0.81, 0.729], atol=1e-12), f"ᾱ={s.alpha_bars}"


def test_single_step_schedule():
    s = build_schedule("linear", 1, 0.02, 0.02)
    assert s.T == 1
    assert math.isclose(s.alpha_bars[0], 0.98, abs_tol=1e-15)
    assert math.isclose(s.posterior_betas[0], 0.02, abs_tol=1e-15)


def test_posterior_variance_hand_value():
    s = _constant()
    assert math.isclose(s.posterior_betas[1], 0.1 / 0.19 * 0.1, rel_tol=1e-12)
    assert abs(s.posterior_betas[1] - 0.0526316) < 1e-7
    assert s.posterior_betas[0] == s.betas[0], "β̃_1 must equal β_1"


def test_default_linear_schedule():
    s = build_schedule()
    assert s.T == 1000
    assert math.isclose(s.betas[0], 1e-4) and math.isclose(s.betas[-1], 0.02)
    assert np.all(np.diff(s.alpha_bars) < 0), "ᾱ must be strictly decreasing"
    assert s.alpha_bars[-1] < 1e-3
    assert np.all(s.posterior_betas <= s.betas + 1e-15), "β̃_t <= β_t"


def test_cosine_schedule():
    s = build_schedule("cosine", 200)
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert np.all(s.betas <= 0.999)
    assert 0 < s.alpha_bars[0] < 1


def test_alpha_bar_at_zero_is_one():
    s = _constant()
    assert s.alpha_bar_at(0) == 1.0
    assert np.allclose(s.alpha_bar_at(np.array([0, 1, 3])), [1.0, 0.9, 0.729])


def test_invalid_schedules():
    for kwargs in (
        dict(kind="linear", T=10, beta_start=0.2, beta_end=0.1),
        dict(kind="linear", T=10, beta_start=0.0, beta_end=0.1),
        dict(kind="linear", T=10, beta_start=0.1, beta_end=1.0),
        dict(kind="linear", T=0),
        dict(kind="sigmoid", T=10),
    ):
        try:
            build_schedule(**kwargs)
        except ConfigError:
            continue
        assert False, f"{kwargs} should raise ConfigError"


def test_snr_diagnostic():
    s = build_schedule()
    snr = signal_to_noise(s)
    assert snr.shape == (1000,)
    assert np.all(np.diff(snr) < 0)


# ===========================================================================
# forward 과정
# ===========================================================================

def test_forward_zero_noise():
    s = build_schedule()
    y0 = np.random.default_rng(0).standard_normal((8, 3))
    y = forward_sample(s, y0, 250, np.zeros_like(y0))
    assert np.allclose(y, math.sqrt(s.alpha_bars[249]) * y0, atol=1e-14)


def test_forward_zero_signal():
    s = build_schedule()
    e = np.random.default_rng(1).standard_normal((8, 3))
    y = forward_sample(s, np.zeros_like(e), 250, e)
    assert np.allclose(y, math.sqrt(1 - s.alpha_bars[249]) * e, atol=1e-15)


def test_forward_monte_carlo_moments():
    s = build_schedule()
    rng = np.random.default_rng(2)
    n, t, y0 = 100_000, 100, 0.7
    y = forward_sample(s, np.full(n, y0), t, rng.standard_normal(n))
    mean_ref = math.sqrt(s.alpha_bars[t - 1]) * y0
    std_ref = math.sqrt(1 - s.alpha_bars[t - 1])
    assert abs(y.mean() - mean_ref) / mean_ref < 0.01, f"mean {y.mean():.4f} vs {mean_ref:.4f}"
    assert abs(y.std() - std_ref) / std_ref < 0.01, f"std {y.std():.4f} vs {std_ref:.4f}"


def test_forward_batched_timesteps():
    s = build_schedule()
    rng = np.random.default_rng(3)
    y0 = rng.standard_normal((4, 8, 3))
    eps = rng.standard_normal((4, 8, 3))
    t = np.array([1, 10, 500, 1000])
    y = forward_sample(s, y0, t, eps)
    for b in range(4):
        assert np.allclose(y[b], forward_sample(s, y0[b], int(t[b]), eps[b]))


def test_forward_step_composes_to_marginal_variance():
    s = _constant(T=2)
    rng = np.random.default_rng(4)
    n = 100_000
    y1 = forward_step(s, np.zeros(n), 1, rng.standard_normal(n))
    y2 = forward_step(s, y1, 2, rng.standard_normal(n))
    assert abs(y2.var() - (1 - 0.81)) / 0.19 < 0.02, f"var {y2.var():.4f}"


def test_forward_rejects_bad_timestep():
    s = _constant()
    for t in (0, 4):
        try:
            forward_sample(s, np.zeros(3), t, np.zeros(3))
        except ValueError:
            continue
        assert False, f"t={t} should raise ValueError"


# ===========================================================================
# 사후 분포
# ===========================================================================

def test_posterior_zero_inputs():
    mean, var = posterior_params(_constant(), np.zeros(3), np.zeros(3), 2)
    assert np.all(mean == 0.0)
    assert var > 0


def test_posterior_hand_value():
    mean, _ = posterior_params(_constant(), np.array(1.0), np.array(1.0), 2)
    coef = math.sqrt(0.9) * 0.1 / 0.19
    assert math.isclose(float(mean), 2 * coef, rel_tol=1e-12), f"μ̃={float(mean)}"


def test_posterior_first_step_returns_clean_data():
    s = build_schedule()
    y0 = np.array([0.3, -0.2])
    mean, var = posterior_params(s, np.array([5.0, 5.0]), y0, 1)
    assert np.allclose(mean, y0, atol=1e-12)
    assert var == s.betas[0]


def test_posterior_preserves_clean_signal():
    # 노이즈 없는 y_t = √ᾱ_t·y0 이면 μ̃ = √ᾱ_{t−1}·y0
    for s in (_constant(T=50, beta=0.01), build_schedule()):
        for t in range(1, s.T + 1):
            c0, ct = posterior_coefficients(s, t)
            ab_prev = float(s.alpha_bar_at(t - 1))
            lhs = c0 + ct * math.sqrt(s.alpha_bars[t - 1])
            assert abs(lhs - math.sqrt(ab_prev)) < 1e-11, f"t={t}: {lhs} vs {math.sqrt(ab_prev)}"


def test_posterior_moment_consistency():
    s = build_schedule()
    rng = np.random.default_rng(5)
    n, t, y0 = 100_000, 100, 0.5
    y_t = forward_sample(s, np.full(n, y0), t, rng.standard_normal(n))
    mean, var = posterior_params(s, y_t, np.full(n, y0), t)
    y_prev = mean + math.sqrt(var) * rng.standard_normal(n)
    ref_mean = math.sqrt(s.alpha_bars[t - 2]) * y0
    ref_std = math.sqrt(1 - s.alpha_bars[t - 2])
    assert abs(y_prev.mean() - ref_mean) / ref_mean < 0.01
    assert abs(y_prev.std() - ref_std) / ref_std < 0.01


# ===========================================================================
# spacing
# ===========================================================================

def test_spacing_examples():
    assert spacing(1000, 20) == list(range(1000, 0, -50))
    assert spacing(10, 10) == list(range(10, 0, -1))
    assert spacing(1000, 1) == [1000]


def test_spacing_rounds_half_up():
    assert spacing(10, 4) == [10, 8, 5, 3], spacing(10, 4)


def test_spacing_strictly_decreasing():
    for T, K in ((1000, 7), (1000, 333), (37, 36), (5, 5)):
        steps = spacing(T, K)
        assert steps[0] == T and steps[-1] >= 1
        assert all(a > b for a, b in zip(steps, steps[1:])), f"T={T}, K={K}: {steps}"


def test_spacing_rejects_bad_k():
    for K in (0, 11):
        try:
            spacing(10, K)
        except ValueError:
            continue
        assert False, f"K={K} should raise ValueError"


# ===========================================================================
# 헬퍼
# ===========================================================================

def test_seed_derivation():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2) != derive_seed(2, 2)
    a = hypothesis_rng(9, 0).standard_normal(4)
    b = hypothesis_rng(9, 0).standard_normal(4)
    assert np.array_equal(a, b)


def test_gradient_clipping():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([[4.0]])}
    assert math.isclose(global_norm(grads), 5.0)
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert math.isclose(norm, 5.0)
    assert math.isclose(global_norm(clipped), 1.0, rel_tol=1e-12)
    same, _ = clip_by_global_norm(grads, 10.0)
    assert same is grads


def run_all_tests() -> bool:
    return run_table("확산 스케줄 테스트", collect_tests(globals()), verbose="--verbose" in sys.argv)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
