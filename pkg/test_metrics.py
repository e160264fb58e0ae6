"""
test_metrics.py - 평가 지표 & 리포트 테스트

1. MPJPE / Procrustes 정렬 / P-MPJPE
2. PCK@150 / AUC
3. 파일 기반 평가 (액션별, subset, CSV) 와 불일치 검출

실행: python test_metrics.py
"""

from __future__ import annotations

import csv
import json
import os
import sys
import tempfile

import numpy as np

from errors import DataMismatchError, DegenerateAlignmentError
from evaluation import auc, evaluate, evaluate_arrays, mpjpe, p_mpjpe, pck, procrustes_align, report_to_csv
from pose import Camera, build_skeleton, generate_synthetic_dataset
from schema import PredictionRecord, read_poses, read_predictions, write_poses, write_predictions
from testkit import collect_tests, random_rotation, run_table


def _pose(seed: int = 0, J: int = 8) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((J, 3)) * 300.0


# ===========================================================================
# MPJPE / Procrustes
# ===========================================================================

def test_mpjpe_identity():
    gt = _pose()
    assert mpjpe(gt, gt) == 0.0


def test_mpjpe_offset_345():
    gt = _pose(1)
    assert mpjpe(gt + np.array([3.0, 4.0, 0.0]), gt) == 5.0


def test_mpjpe_shape_check():
    try:
        mpjpe(np.zeros((3, 3)), np.zeros((4, 3)))
    except ValueError:
        return
    assert False, "shape mismatch should raise ValueError"


def test_procrustes_removes_similarity():
    rng = np.random.default_rng(2)
    for i in range(50):
        gt = _pose(100 + i)
        R = random_rotation(rng)
        pred = 2.0 * gt @ R.T + rng.standard_normal(3) * 500.0
        assert p_mpjpe(pred, gt) <= 1e-9, f"trial {i}: residual {p_mpjpe(pred, gt):.2e}"


def test_procrustes_rejects_reflection():
    gt = _pose(3)
    mirrored = gt * np.array([-1.0, 1.0, 1.0])
    residual = p_mpjpe(mirrored, gt)
    assert residual > 1.0, f"reflection must not be removable, residual {residual}"


def test_procrustes_residual_never_exceeds_unaligned():
    rng = np.random.default_rng(4)
    for _ in range(200):
        pred, gt = rng.standard_normal((8, 3)) * 200, rng.standard_normal((8, 3)) * 200
        aligned = procrustes_align(pred, gt)
        assert np.sum((aligned - gt) ** 2) <= np.sum((pred - gt) ** 2) + 1e-9


def test_p_mpjpe_below_mpjpe_for_noisy_similarity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        gt = _pose(int(rng.integers(1 << 30)))
        pred = 1.3 * gt @ random_rotation(rng).T + 40.0 + rng.standard_normal((8, 3)) * 10.0
        assert p_mpjpe(pred, gt) <= mpjpe(pred, gt)


def test_p_mpjpe_below_mpjpe_for_random_pairs():
    rng = np.random.default_rng(6)
    for i in range(500):
        pred, gt = rng.standard_normal((2, 8, 3)) * 200.0
        assert p_mpjpe(pred, gt) <= mpjpe(pred, gt) + 1e-9, f"pair {i}"


def test_procrustes_degenerate():
    try:
        procrustes_align(np.ones((5, 3)), _pose(6, J=5))
    except DegenerateAlignmentError:
        return
    assert False, "coincident joints should raise DegenerateAlignmentError"


# ===========================================================================
# PCK / AUC
# ===========================================================================

def test_pck_all_within():
    gt = _pose(7)
    assert pck(gt + np.array([100.0, 0.0, 0.0]), gt) == 100.0


def test_pck_half():
    gt = np.zeros((2, 3))
    pred = np.array([[40.0, 0.0, 0.0], [0.0, 200.0, 0.0]])
    assert pck(pred, gt) == 50.0


def test_perfect_prediction_auc():
    gt = _pose(8)
    assert auc(gt, gt) == 1.0
    assert all(pck(gt, gt, t) == 100.0 for t in (0.0, 5.0, 150.0))


def test_pck_monotone_and_auc_bounded():
    rng = np.random.default_rng(9)
    for _ in range(100):
        gt, pred = _pose(int(rng.integers(1 << 30))), _pose(int(rng.integers(1 << 30)))
        values = [pck(pred, gt, t) for t in range(0, 400, 10)]
        assert all(a <= b for a, b in zip(values, values[1:]))
        assert 0.0 <= auc(pred, gt) <= 1.0


def test_pck_negative_threshold():
    try:
        pck(np.zeros((2, 3)), np.zeros((2, 3)), -1.0)
    except ValueError:
        return
    assert False, "negative threshold should raise ValueError"


# ===========================================================================
# 파일 기반 평가
# ===========================================================================

def _write_pair(tmp: str, n: int = 6, noise: float = 0.0):
    gt = generate_synthetic_dataset(build_skeleton("desk8"), n, Camera(), 0.0, 11, L=0, d=2)
    gt_path = os.path.join(tmp, "gt.jsonl")
    write_poses(gt_path, gt)
    rng = np.random.default_rng(12)
    preds = [PredictionRecord(s.sample_id, s.pose3d + rng.standard_normal((8, 3)) * noise, "A",
                              confidence=1.0, action_tag=s.action_tag) for s in gt]
    pred_path = os.path.join(tmp, "pred.jsonl")
    write_predictions(pred_path, preds[::-1], strategy="A")
    return gt_path, pred_path


def test_evaluate_identity():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, pred_path = _write_pair(tmp)
        report = evaluate(pred_path, gt_path)
    assert report.mpjpe_mm == 0.0 and report.pck150 == 100.0 and report.auc == 1.0
    assert report.p_mpjpe_mm < 1e-9
    assert report.frame_count == 6


def test_evaluate_matches_brute_force():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, pred_path = _write_pair(tmp, noise=30.0)
        report = evaluate(pred_path, gt_path)

        preds = {p.frame_id: p.pose3d for p in read_predictions(pred_path)}
        gts = read_poses(gt_path)
    errors = [mpjpe(preds[g.sample_id], g.pose3d) for g in gts]
    assert np.isclose(report.mpjpe_mm, np.mean(errors), rtol=1e-12)
    assert np.isclose(report.p_mpjpe_mm, np.mean([p_mpjpe(preds[g.sample_id], g.pose3d) for g in gts]))
    by_action: dict[str, list[float]] = {}
    for g, e in zip(gts, errors):
        by_action.setdefault(g.action_tag, []).append(e)
    for tag, errs in by_action.items():
        assert np.isclose(report.per_action[tag]["mpjpe_mm"], np.mean(errs))
        assert report.per_action[tag]["frames"] == len(errs)


def test_single_frame_report():
    gt = _pose(13)[None]
    pred = gt + 7.0
    report = evaluate_arrays(pred, gt, ["walk"])
    assert report.per_action["walk"]["mpjpe_mm"] == report.mpjpe_mm == mpjpe(pred[0], gt[0])


def test_subset_report():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, pred_path = _write_pair(tmp, noise=20.0)
        ids = [s.sample_id for s in read_poses(gt_path)][:2]
        report = evaluate(pred_path, gt_path, subset=ids)
    assert report.subset["ids"] == 2


def test_frame_count_mismatch():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, _ = _write_pair(tmp)
        short = os.path.join(tmp, "short.jsonl")
        gt = read_poses(gt_path)
        write_predictions(short, [PredictionRecord(s.sample_id, s.pose3d, "A") for s in gt[:3]], strategy="A")
        try:
            evaluate(short, gt_path)
        except DataMismatchError:
            return
    assert False, "fewer predictions than ground truth should raise DataMismatchError"


def test_frame_id_mismatch():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, _ = _write_pair(tmp)
        bad = os.path.join(tmp, "bad.jsonl")
        gt = read_poses(gt_path)
        write_predictions(bad, [PredictionRecord(f"x{i}", s.pose3d, "A") for i, s in enumerate(gt)], strategy="A")
        try:
            evaluate(bad, gt_path)
        except DataMismatchError:
            return
    assert False, "unknown frame ids should raise DataMismatchError"


def test_report_outputs():
    with tempfile.TemporaryDirectory() as tmp:
        gt_path, pred_path = _write_pair(tmp, noise=15.0)
        report = evaluate(pred_path, gt_path)
        data = json.loads(report.to_json())
        assert list(data) == sorted(data)
        path = report_to_csv(report, os.path.join(tmp, "r.csv"))
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    assert rows[0] == ["action", "frames", "MPJPE", "P-MPJPE", "PCK150", "AUC"]
    assert rows[-1][0] == "Avg" and rows[-1][1] == "6"
    assert len(rows) == 2 + len(report.per_action)


def run_all_tests() -> bool:
    return run_table("평가 지표 테스트", collect_tests(globals()), verbose="--verbose" in sys.argv)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
