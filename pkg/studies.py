"""
studies.py - 분석 스터디 (CSV + JSON 쌍으로 reports/ 에 기록)

hypotheses : 가설 수 H 스윕 × 집계 전략별 MPJPE
             (프리픽스 시딩: 최대 H로 한 번 샘플링 후 앞 H개 사용 → 중첩 세트)
confidence : recall 스윕, 분산 점수 하위 프레임만 남겼을 때 MPJPE
ablation   : 조건 채널 마스킹 (pose / context / both) × {A, M, B, Bjoint}
             조건마다 마스크를 건 채로 다시 학습한 체크포인트를 쓴다.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import replace
from pathlib import Path

import numpy as np

try:
    from .config import ABLATION_COLUMNS, ABLATION_CONDITIONS, AGGREGATION_STRATEGIES
    from .diffusion import LiftEngine
    from .diffusion._helpers import frame_seed
    from .errors import ConfigError
    from .evaluation import aggregate, confidence_filter, mpjpe
    from .pose import HypothesisSet, PoseSample
    from .schema import read_hypotheses
except ImportError:
    from config import ABLATION_COLUMNS, ABLATION_CONDITIONS, AGGREGATION_STRATEGIES
    from diffusion import LiftEngine
    from diffusion._helpers import frame_seed
    from errors import ConfigError
    from evaluation import aggregate, confidence_filter, mpjpe
    from pose import HypothesisSet, PoseSample
    from schema import read_hypotheses

logger = logging.getLogger(__name__)

STUDY_KINDS = ("hypotheses", "confidence", "ablation")


def write_study(rows: list[dict], csv_path: str | Path, columns: list[str] | None = None) -> tuple[Path, Path]:
    """rows → CSV + 같은 이름의 .json"""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    columns = columns or (list(rows[0]) if rows else [])
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    json_path = csv_path.with_suffix(".json")
    with open(json_path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"columns": columns, "rows": rows}, indent=2, sort_keys=True))
        f.write("\n")
    return csv_path, json_path


def _strategy_mpjpe(sets: list[HypothesisSet], gts: list[np.ndarray], strategy: str, seed: int) -> float:
    errors = [
        mpjpe(aggregate(hs, strategy, gt=gt, seed=frame_seed(seed, i)).pose, gt)
        for i, (hs, gt) in enumerate(zip(sets, gts))
    ]
    return float(np.mean(errors))


# =============================================================================
# 가설 수 스윕
# =============================================================================

def study_hypothesis_count(
    engine: LiftEngine,
    test_set: list[PoseSample],
    H_values,
    K: int,
    seed: int,
    variant: str = "ddim",
    strategies=AGGREGATION_STRATEGIES,
    progress: bool = False,
) -> list[dict]:
    """(H, strategy)마다 한 행. 행 수 = |H_values| × |strategies|"""
    H_values = list(H_values)
    full = engine.sample_dataset(test_set, max(H_values), K, seed, variant, progress)
    gts = [s.pose3d for s in test_set]
    rows = []
    for H in H_values:
        sets = [hs.prefix(H) for hs in full]
        for strategy in strategies:
            rows.append({"H": H, "strategy": strategy,
                         "mpjpe_mm": _strategy_mpjpe(sets, gts, strategy, seed), "frames": len(sets)})
        logger.info(f"H={H}: " + ", ".join(f"{r['strategy']}={r['mpjpe_mm']:.2f}" for r in rows[-len(strategies):]))
    return rows


# =============================================================================
# 신뢰도 스윕
# =============================================================================

def study_confidence(
    sets: list[HypothesisSet],
    test_set: list[PoseSample],
    recall_values,
    strategy: str = "A",
    seed: int = 0,
) -> list[dict]:
    """recall 내림차순 행: recall, kept/total 프레임, kept/all MPJPE"""
    gt_by_id = {s.sample_id: s.pose3d for s in test_set}
    frames = [(hs, gt_by_id[hs.frame_id]) for hs in sets]
    rows = []
    for recall in sorted(recall_values, reverse=True):
        result = confidence_filter(frames, recall, strategy=strategy, seed=seed)
        rows.append({
            "recall": float(recall),
            "kept_frames": len(result.kept_indices),
            "total_frames": len(frames),
            "mpjpe_kept_mm": result.mpjpe_kept,
            "mpjpe_all_mm": result.mpjpe_all,
            "improvement_mm": result.improvement,
        })
    return rows


# =============================================================================
# 조건 어블레이션
# =============================================================================

def _ablation_engine(core, condition: str, checkpoint: str | None) -> LiftEngine:
    if checkpoint is not None:
        if not os.path.exists(checkpoint):
            raise ConfigError(f"missing checkpoint for condition '{condition}': {checkpoint}")
        engine = LiftEngine.load(checkpoint)
        if engine.model.config.conditioning != condition:
            raise ConfigError(
                f"checkpoint {checkpoint} was trained with conditioning="
                f"'{engine.model.config.conditioning}', expected '{condition}'"
            )
        return engine

    cfg = core.config
    engine = LiftEngine.create(replace(cfg.denoiser, conditioning=condition), replace(cfg.train),
                               core.skeleton, cfg.data.L)
    engine.train(core.train_set, progress=cfg.progress)
    path = os.path.join(core.layout.ckpt_dir, f"ablation_{condition}.ckpt")
    engine.save(path)
    logger.info(f"어블레이션 체크포인트 ({condition}): {path}")
    return engine


def study_conditioning_ablation(core, checkpoints: dict[str, str] | None = None) -> list[dict]:
    """3 × 4 표: 행 = 조건, 열 = A, M, B, Bjoint"""
    sc = core.config.sampler
    gts = [s.pose3d for s in core.test_set]
    rows = []
    for condition in ABLATION_CONDITIONS:
        if checkpoints is not None and condition not in checkpoints:
            raise ConfigError(f"missing checkpoint for condition '{condition}'")
        engine = _ablation_engine(core, condition, checkpoints[condition] if checkpoints else None)
        sets = engine.sample_dataset(core.test_set, sc.H, sc.K, sc.seed, sc.variant, core.config.progress)
        row: dict = {"condition": condition}
        for strategy in ABLATION_COLUMNS:
            row[strategy] = _strategy_mpjpe(sets, gts, strategy, sc.seed)
        rows.append(row)
    return rows


# =============================================================================
# CLI 진입점
# =============================================================================

def run_study(core, kind: str, checkpoints: dict[str, str] | None = None) -> tuple[list[dict], Path]:
    """스터디 실행 후 reports/study_<kind>.csv(.json) 기록"""
    if kind not in STUDY_KINDS:
        raise ConfigError(f"unknown study kind: {kind} (available: {', '.join(STUDY_KINDS)})")
    core._require_data()
    cfg = core.config
    sc = cfg.sampler
    csv_path = Path(core.layout.reports_dir) / f"study_{kind}.csv"

    with core.stage(f"study-{kind}"):
        if kind == "hypotheses":
            engine = core._require_engine()
            rows = study_hypothesis_count(engine, core.test_set, cfg.eval.study_H, sc.K, sc.seed,
                                          sc.variant, progress=cfg.progress)
        elif kind == "confidence":
            if core.hypothesis_sets is None:
                if os.path.exists(core.layout.hypotheses):
                    core.hypothesis_sets = read_hypotheses(core.layout.hypotheses)
                else:
                    core.sample()
            rows = study_confidence(core.hypothesis_sets, core.test_set, cfg.eval.study_recall,
                                    strategy=cfg.eval.strategy, seed=cfg.seed)
        else:
            rows = study_conditioning_ablation(core, checkpoints)
        csv_out, json_out = write_study(rows, csv_path)
        core.manifest.finish_stage(f"study-{kind}", {"csv": str(csv_out), "json": str(json_out)}, rows=len(rows))
    return rows, csv_out
