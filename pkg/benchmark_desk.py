"""
benchmark_desk.py - 데스크 스케일 수용 기준 벤치마크

desk 프리셋(J=8, d=32, 2+2 블록)으로 파이프라인을 한 번 돌린 뒤
학습된 모델 위에서 성질 기반 기준을 하나씩 확인하고 소요 시간을 잰다.

  learning     : M 집계 MPJPE ≤ 평균 포즈 예측기 MPJPE의 50%
  dominance    : 프레임마다 Bjoint ≤ B ≤ R, 평균 M ≤ 평균 R
  ablation     : 열 A에서 both ≤ context ≤ pose (조건별 재학습)
  confidence   : recall 0.9 유지 프레임 MPJPE ≤ 전체 MPJPE
  hypotheses   : 프리픽스 세트에서 H가 늘수록 B MPJPE 비증가
  determinism  : 같은 설정 재실행 → report.json / 체크포인트 바이트 동일 (작은 설정)
  oracle       : 참 노이즈 오라클로 T=1000, K=20 역과정 → y0 상대오차 ≤ 1e-4 (100 포즈)
  pmpjpe       : 무작위 쌍 10⁴개에서 P-MPJPE > MPJPE 인 경우 0개

사용법:
  python benchmark_desk.py                         # 전체 (5000/500 프레임, 30 epochs)
  python benchmark_desk.py --quick                 # 빠른 점검 (작은 데이터, 5 epochs)
  python benchmark_desk.py --skip ablation         # 특정 기준 건너뛰기
  python benchmark_desk.py --csv result.csv        # CSV 내보내기
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
from dotenv import load_dotenv
load_dotenv()

from config import STUDY_H_VALUES
from core import Core, run_pipeline
from diffusion import build_schedule, ddim_step, forward_sample, spacing
from diffusion._helpers import frame_seed
from evaluation import aggregate, mpjpe, p_mpjpe
from factories import get_config
from pose import mean_pose
from studies import run_study, study_confidence, study_hypothesis_count

# 로깅 최소화
logging.basicConfig(level=os.environ.get("LIFTKIT_LOG_LEVEL", "WARNING").upper())


class C:
    """ANSI 컬러 코드"""
    RESET = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"
    RED = "\033[91m"
    GREEN = "\033[92m"
    CYAN = "\033[96m"


CHECKS = ("learning", "dominance", "ablation", "confidence", "hypotheses", "determinism", "oracle", "pmpjpe")

QUICK_OVERRIDES = {
    "data": {"n_train": 500, "n_test": 50},
    "train": {"epochs": 5},
}


# =============================================================================
# 결과 기록
# =============================================================================

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float
    detail: str = ""

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass
class BenchmarkRun:
    results: list[CheckResult] = field(default_factory=list)
    setup_seconds: float = 0.0

    def add(self, result: CheckResult) -> None:
        self.results.append(result)
        color = C.GREEN if result.passed else C.RED
        print(f"  {color}{result.status:<4s}{C.RESET} {result.name:<12s} "
              f"{result.value:>12.4f} {C.DIM}({result.seconds:,.1f}s){C.RESET}  {result.detail}")


def bar(value: float, max_value: float, width: int = 30) -> str:
    """수평 막대 그래프"""
    if max_value <= 0:
        return ""
    filled = min(int(value / max_value * width), width)
    return f"{'█' * filled}{'░' * (width - filled)}"


# =============================================================================
# 기준별 확인
# =============================================================================

def check_learning(core: Core, preds: dict[str, list[np.ndarray]], gts: list[np.ndarray]) -> CheckResult:
    t0 = time.perf_counter()
    baseline_pose = mean_pose(core.train_set)
    baseline = float(np.mean([mpjpe(baseline_pose, gt) for gt in gts]))
    model = float(np.mean([mpjpe(p, gt) for p, gt in zip(preds["M"], gts)]))
    return CheckResult("learning", model <= 0.5 * baseline, model, 0.5 * baseline,
                       time.perf_counter() - t0, f"M={model:.2f}mm, mean-pose={baseline:.2f}mm")


def check_dominance(preds: dict[str, list[np.ndarray]], gts: list[np.ndarray]) -> CheckResult:
    t0 = time.perf_counter()
    errors = {s: np.array([mpjpe(p, gt) for p, gt in zip(preds[s], gts)]) for s in ("M", "R", "B", "Bjoint")}
    tol = 1e-9
    bad_joint = int(np.sum(errors["Bjoint"] > errors["B"] + tol))
    bad_best = int(np.sum(errors["B"] > errors["R"] + tol))
    m_mean, r_mean = float(errors["M"].mean()), float(errors["R"].mean())
    passed = bad_joint == 0 and bad_best == 0 and m_mean <= r_mean
    return CheckResult("dominance", passed, float(bad_joint + bad_best), 0.0, time.perf_counter() - t0,
                       f"Bjoint>B: {bad_joint}, B>R: {bad_best}, M={m_mean:.2f} R={r_mean:.2f}")


def check_ablation(core: Core) -> CheckResult:
    t0 = time.perf_counter()
    rows, _ = run_study(core, "ablation")
    col = {r["condition"]: r["A"] for r in rows}
    passed = col["both"] <= col["context"] <= col["pose"]
    return CheckResult("ablation", passed, col["both"], col["context"], time.perf_counter() - t0,
                       f"A: both={col['both']:.2f} context={col['context']:.2f} pose={col['pose']:.2f}")


def check_confidence(core: Core) -> CheckResult:
    t0 = time.perf_counter()
    (row,) = study_confidence(core.hypothesis_sets, core.test_set, [0.9], strategy=core.config.eval.strategy,
                              seed=core.config.seed)
    passed = row["mpjpe_kept_mm"] <= row["mpjpe_all_mm"]
    return CheckResult("confidence", passed, row["mpjpe_kept_mm"], row["mpjpe_all_mm"], time.perf_counter() - t0,
                       f"kept {row['kept_frames']}/{row['total_frames']}: "
                       f"{row['mpjpe_kept_mm']:.2f} vs {row['mpjpe_all_mm']:.2f}mm")


def check_hypotheses(core: Core) -> CheckResult:
    t0 = time.perf_counter()
    sc = core.config.sampler
    rows = study_hypothesis_count(core.engine, core.test_set, STUDY_H_VALUES, sc.K, sc.seed,
                                  sc.variant, strategies=("B",), progress=core.config.progress)
    curve = [r["mpjpe_mm"] for r in rows]
    increases = sum(1 for a, b in zip(curve, curve[1:]) if b > a + 1e-9)
    detail = "B: " + " → ".join(f"H{r['H']}={r['mpjpe_mm']:.1f}" for r in rows)
    return CheckResult("hypotheses", increases == 0, float(increases), 0.0, time.perf_counter() - t0, detail)


def check_determinism(seed: int) -> CheckResult:
    """작은 설정으로 두 번 실행해 바이트 비교"""
    t0 = time.perf_counter()
    files = ("reports/report.json", "ckpt/model.ckpt", "ckpt/last.ckpt", "manifest.json")
    overrides = {
        "seed": seed,
        "progress": False,
        "data": {"n_train": 64, "n_test": 8, "L": 1, "d": 8},
        "denoiser": {"d": 8, "n_p2c": 1, "n_j2j": 1},
        "train": {"epochs": 2, "batch_size": 16, "T": 100},
        "sampler": {"H": 4, "K": 5},
    }
    with tempfile.TemporaryDirectory() as tmp:
        overrides["out_dir"] = os.path.join(tmp, "run")
        blobs = []
        for _ in range(2):
            config = get_config(None, preset="desk", overrides=overrides, use_env=False)
            run_pipeline(config)
            blobs.append({})
            for name in files:
                with open(os.path.join(config.out_dir, name), "rb") as f:
                    blobs[-1][name] = f.read()
            shutil.rmtree(config.out_dir)
    differing = [name for name in files if blobs[0][name] != blobs[1][name]]
    return CheckResult("determinism", not differing, float(len(differing)), 0.0, time.perf_counter() - t0,
                       "identical" if not differing else "differs: " + ", ".join(differing))


class _Oracle:
    """forward_sample에 쓴 참 노이즈를 그대로 예측"""

    def __init__(self, eps: np.ndarray):
        self.eps = eps
        self.J = eps.shape[-2]

    def predict_noise(self, y_t, F, t):
        return np.broadcast_to(self.eps, np.shape(y_t))


def check_oracle(seed: int, n_poses: int = 100, J: int = 8, K: int = 20) -> CheckResult:
    t0 = time.perf_counter()
    schedule = build_schedule("linear", 1000)
    steps = spacing(schedule.T, K)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_poses):
        y0 = rng.standard_normal((J, 3)) * 0.3
        eps = rng.standard_normal((J, 3))
        oracle = _Oracle(eps)
        y = forward_sample(schedule, y0, schedule.T, eps)
        for k, t_cur in enumerate(steps):
            t_next = steps[k + 1] if k + 1 < len(steps) else 0
            y, _ = ddim_step(oracle, schedule, y, t_cur, t_next, None)
        worst = max(worst, float(np.linalg.norm(y - y0) / np.linalg.norm(y0)))
    seconds = time.perf_counter() - t0
    return CheckResult("oracle", worst <= 1e-4 and seconds < 5.0, worst, 1e-4, seconds,
                       f"max relative error {worst:.2e} over {n_poses} poses")


def check_pmpjpe(seed: int, n_pairs: int = 10_000, J: int = 8) -> CheckResult:
    """무작위 쌍에서 정렬 후 오차가 정렬 전보다 커지는 경우가 없어야 한다"""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n_pairs):
        pred, gt = rng.standard_normal((2, J, 3)) * 200.0
        if p_mpjpe(pred, gt) > mpjpe(pred, gt) + 1e-9:
            violations += 1
    return CheckResult("pmpjpe", violations == 0, float(violations), 0.0, time.perf_counter() - t0,
                       f"{violations}/{n_pairs} pairs with P-MPJPE > MPJPE")


# =============================================================================
# 실행
# =============================================================================

def _aggregate_all(core: Core) -> tuple[dict[str, list[np.ndarray]], list[np.ndarray]]:
    gts = [s.pose3d for s in core.test_set]
    preds: dict[str, list[np.ndarray]] = {}
    for strategy in ("M", "R", "B", "Bjoint"):
        preds[strategy] = [
            aggregate(hs, strategy, gt=gt, seed=frame_seed(core.config.seed, i)).pose
            for i, (hs, gt) in enumerate(zip(core.hypothesis_sets, gts))
        ]
    return preds, gts


def run_benchmark(args) -> BenchmarkRun:
    run = BenchmarkRun()
    wanted = [c for c in CHECKS if c not in set(args.skip or [])]
    needs_model = {"learning", "dominance", "ablation", "confidence", "hypotheses"} & set(wanted)

    core = None
    if needs_model:
        overrides = {"seed": args.seed, "out_dir": args.out, "progress": not args.no_progress}
        if args.quick:
            overrides.update(QUICK_OVERRIDES)
        config = get_config(args.config, preset="desk", overrides=overrides)
        print(f"  {C.DIM}train={config.data.n_train}, test={config.data.n_test}, "
              f"epochs={config.train.epochs}, H={config.sampler.H}, K={config.sampler.K}{C.RESET}")
        t0 = time.perf_counter()
        core = Core(config)
        report = core.run()
        run.setup_seconds = time.perf_counter() - t0
        print(f"  📊 {report.summary_line()} {C.DIM}({run.setup_seconds:,.1f}s){C.RESET}\n")

    preds, gts = _aggregate_all(core) if core is not None else ({}, [])
    for name in wanted:
        if name == "learning":
            run.add(check_learning(core, preds, gts))
        elif name == "dominance":
            run.add(check_dominance(preds, gts))
        elif name == "ablation":
            run.add(check_ablation(core))
        elif name == "confidence":
            run.add(check_confidence(core))
        elif name == "hypotheses":
            run.add(check_hypotheses(core))
        elif name == "determinism":
            run.add(check_determinism(args.seed))
        elif name == "oracle":
            run.add(check_oracle(args.seed))
        elif name == "pmpjpe":
            run.add(check_pmpjpe(args.seed))
    return run


def print_summary(run: BenchmarkRun):
    print(f"\n{'=' * 72}")
    print(f"  {C.BOLD}{C.CYAN}벤치마크 결과 요약{C.RESET}")
    print(f"{'=' * 72}")

    total = run.setup_seconds + sum(r.seconds for r in run.results)
    print(f"\n  {'기준':<12s} {'판정':>4s} {'시간':>9s}  그래프")
    print(f"  {'-' * 12} {'-' * 4} {'-' * 9}  {'-' * 30}")
    if run.setup_seconds:
        print(f"  {'pipeline':<12s} {'-':>4s} {run.setup_seconds:>8,.1f}s  {bar(run.setup_seconds, total)}")
    for r in run.results:
        print(f"  {r.name:<12s} {r.status:>4s} {r.seconds:>8,.1f}s  {bar(r.seconds, total)}")

    passed = sum(1 for r in run.results if r.passed)
    color = C.GREEN if passed == len(run.results) else C.RED
    print(f"\n  {color}{passed}/{len(run.results)} 통과{C.RESET}, 총 {total:,.1f}s")


def export_csv(run: BenchmarkRun, filepath: str):
    """결과를 CSV로 내보내기"""
    with open(filepath, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["check", "status", "value", "threshold", "seconds", "detail"])
        for r in run.results:
            writer.writerow([
                r.name, r.status,
                f"{r.value:.6g}",
                f"{r.threshold:.6g}",
                round(r.seconds, 2),
                r.detail,
            ])
    print(f"\n  CSV 내보내기: {filepath}")


def main():
    parser = argparse.ArgumentParser(description="liftkit 데스크 스케일 벤치마크")
    parser.add_argument("--config", default=None, help="JSON 설정 파일 (desk 프리셋 위에 덮어씀)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/benchmark_desk", help="파이프라인 산출물 디렉토리")
    parser.add_argument("--quick", action="store_true", help="작은 데이터 + 5 epochs")
    parser.add_argument("--skip", nargs="*", choices=list(CHECKS), help="건너뛸 기준")
    parser.add_argument("--no-progress", action="store_true", help="진행 표시줄 끄기")
    parser.add_argument("--csv", metavar="FILE", help="결과 CSV 파일 경로")
    args = parser.parse_args()

    print(f"\n  {C.BOLD}liftkit 데스크 벤치마크{C.RESET} (seed={args.seed}{', quick' if args.quick else ''})")
    run = run_benchmark(args)
    print_summary(run)

    if args.csv:
        export_csv(run, args.csv)

    sys.exit(0 if all(r.passed for r in run.results) else 1)


if __name__ == "__main__":
    main()
