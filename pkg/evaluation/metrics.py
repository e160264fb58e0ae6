"""
evaluation/metrics.py - 3D 포즈 평가 지표

MPJPE     : 관절별 유클리드 거리 평균 (mm)
P-MPJPE   : 유사변환(스케일 + 회전(det +1) + 이동) Procrustes 정렬 후 MPJPE
PCK@150   : 오차 ≤ 150mm 관절 비율 (%)
AUC       : 0~150mm (5mm 간격 31점) PCK/100 평균

전체 수치는 프레임 균등 평균, 액션별 수치는 액션 내부 프레임 균등 평균.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    from ..config import AUC_THRESHOLDS_MM, PCK_THRESHOLD_MM
    from ..errors import DataMismatchError, DegenerateAlignmentError
    from ..schema.poses import read_poses, read_predictions
except ImportError:
    from config import AUC_THRESHOLDS_MM, PCK_THRESHOLD_MM
    from errors import DataMismatchError, DegenerateAlignmentError
    from schema.poses import read_poses, read_predictions

logger = logging.getLogger(__name__)

UNKNOWN_ACTION = "unknown"
CSV_COLUMNS = ("action", "frames", "MPJPE", "P-MPJPE", "PCK150", "AUC")
_DEGENERATE_TOL = 1e-12


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise ValueError(f"pose shapes differ or are not J×3: {pred.shape} vs {gt.shape}")
    return pred, gt


def joint_errors(pred, gt) -> np.ndarray:
    pred, gt = _pair(pred, gt)
    return np.linalg.norm(pred - gt, axis=-1)


def mpjpe(pred, gt) -> float:
    return float(joint_errors(pred, gt).mean())


def procrustes_align(pred, gt) -> np.ndarray:
    """pred를 gt에 유사변환 정렬 (반사 금지)

    중심화 → 교차공분산 SVD → det 부호 보정 → 최적 스케일.
    """
    pred, gt = _pair(pred, gt)
    mu_p = pred.mean(axis=0)
    mu_g = gt.mean(axis=0)
    X = pred - mu_p
    Y = gt - mu_g
    norm_x = float(np.sum(X * X))
    if norm_x <= _DEGENERATE_TOL:
        raise DegenerateAlignmentError("all predicted joints coincide; alignment is undefined")

    U, S, Vt = np.linalg.svd(X.T @ Y)
    sign = 1.0 if np.linalg.det(Vt.T @ U.T) >= 0 else -1.0
    D = np.diag([1.0, 1.0, sign])
    R = Vt.T @ D @ U.T
    scale = float(np.sum(S * np.diag(D))) / norm_x
    return scale * X @ R.T + mu_g


def p_mpjpe(pred, gt) -> float:
    return mpjpe(procrustes_align(pred, gt), gt)


def pck(pred, gt, threshold_mm: float = PCK_THRESHOLD_MM) -> float:
    if threshold_mm < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold_mm}")
    return float(np.mean(joint_errors(pred, gt) <= threshold_mm) * 100.0)


def auc(pred, gt, thresholds=AUC_THRESHOLDS_MM) -> float:
    errors = joint_errors(pred, gt)
    return float(np.mean([np.mean(errors <= t) for t in thresholds]))


# =============================================================================
# 데이터셋 단위 리포트
# =============================================================================

@dataclass
class MetricReport:
    mpjpe_mm: float
    p_mpjpe_mm: float
    pck150: float
    auc: float
    frame_count: int
    per_action: dict[str, dict] = field(default_factory=dict)
    subset: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_line(self) -> str:
        return (f"MPJPE {self.mpjpe_mm:.2f}mm | P-MPJPE {self.p_mpjpe_mm:.2f}mm | "
                f"PCK150 {self.pck150:.1f}% | AUC {self.auc:.3f} | frames {self.frame_count}")


def frame_metrics(pred, gt) -> dict[str, float]:
    return {"mpjpe_mm": mpjpe(pred, gt), "p_mpjpe_mm": p_mpjpe(pred, gt),
            "pck150": pck(pred, gt), "auc": auc(pred, gt)}


def _mean_rows(rows: list[dict[str, float]]) -> dict[str, float]:
    # 고정 순서 합산
    return {k: float(np.mean([r[k] for r in rows])) for k in ("mpjpe_mm", "p_mpjpe_mm", "pck150", "auc")}


def evaluate_arrays(preds, gts, actions: list[str | None] | None = None, group_by_action: bool = True) -> MetricReport:
    """(N, J, 3) 예측/정답 배열 평가"""
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if preds.shape != gts.shape or len(preds) == 0:
        raise DataMismatchError(f"prediction/ground-truth shapes differ or are empty: {preds.shape} vs {gts.shape}")
    rows = [frame_metrics(p, g) for p, g in zip(preds, gts)]
    overall = _mean_rows(rows)

    per_action: dict[str, dict] = {}
    if group_by_action:
        tags = [a or UNKNOWN_ACTION for a in (actions or [None] * len(rows))]
        for tag in sorted(set(tags)):
            members = [r for r, a in zip(rows, tags) if a == tag]
            per_action[tag] = dict(_mean_rows(members), frames=len(members))
    return MetricReport(frame_count=len(rows), per_action=per_action, **overall)


def evaluate(pred_file, gt_file, group_by_action: bool = True, subset: list[str] | None = None) -> MetricReport:
    """예측 파일 vs 정답 데이터셋 파일

    프레임 id 집합과 개수가 같아야 한다 (순서 무관, 정답 순서로 평가).
    subset: 추가로 보고할 어려운 프레임 id 목록.
    """
    preds = read_predictions(pred_file)
    gts = read_poses(gt_file)
    if len(preds) != len(gts):
        raise DataMismatchError(f"frame count mismatch: {len(preds)} predictions vs {len(gts)} ground-truth samples")
    by_id = {p.frame_id: p for p in preds}
    if len(by_id) != len(preds):
        raise DataMismatchError("duplicate frame ids in predictions")
    missing = [g.sample_id for g in gts if g.sample_id not in by_id]
    if missing:
        raise DataMismatchError(f"{len(missing)} ground-truth ids have no prediction (first: {missing[0]})")

    pred_arr = np.stack([by_id[g.sample_id].pose3d for g in gts])
    gt_arr = np.stack([g.pose3d for g in gts])
    actions = [g.action_tag for g in gts]
    report = evaluate_arrays(pred_arr, gt_arr, actions, group_by_action)

    if subset is not None:
        wanted = set(subset)
        unknown = wanted - {g.sample_id for g in gts}
        if unknown:
            raise DataMismatchError(f"subset ids not in ground truth: {sorted(unknown)[:5]}")
        idx = [i for i, g in enumerate(gts) if g.sample_id in wanted]
        sub = evaluate_arrays(pred_arr[idx], gt_arr[idx], [actions[i] for i in idx], group_by_action=False)
        report.subset = {"ids": len(idx), "mpjpe_mm": sub.mpjpe_mm, "p_mpjpe_mm": sub.p_mpjpe_mm,
                         "pck150": sub.pck150, "auc": sub.auc}
    logger.info(f"평가 완료: {report.summary_line()}")
    return report


def report_to_csv(report: MetricReport, path: str | Path) -> Path:
    """액션별 표 형식 CSV (마지막 행 Avg)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for tag, row in report.per_action.items():
            writer.writerow([tag, row["frames"], f"{row['mpjpe_mm']:.2f}", f"{row['p_mpjpe_mm']:.2f}",
                             f"{row['pck150']:.1f}", f"{row['auc']:.4f}"])
        writer.writerow(["Avg", report.frame_count, f"{report.mpjpe_mm:.2f}", f"{report.p_mpjpe_mm:.2f}",
                         f"{report.pck150:.1f}", f"{report.auc:.4f}"])
    return path


__all__ = [
    "MetricReport",
    "mpjpe",
    "p_mpjpe",
    "procrustes_align",
    "pck",
    "auc",
    "joint_errors",
    "frame_metrics",
    "evaluate",
    "evaluate_arrays",
    "report_to_csv",
]
