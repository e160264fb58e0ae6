"""
test_pipeline.py - 파이프라인 / CLI 통합 테스트

1. 설정 로드 우선순위와 검증 (ConfigError)
2. run_pipeline 재현성 (같은 설정 → 같은 리포트, 체크포인트, 매니페스트)
3. 단계 실패 시 부분 매니페스트
4. 스터디 (hypotheses / confidence / ablation)
5. CLI 종료 코드 (0 성공, 1 실행 오류, 2 설정 오류)

아주 작은 설정 (J=8, d=8, T=20, 2 epochs)으로 CPU에서 수 초 안에 끝난다.

실행: python test_pipeline.py
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import sys
import tempfile

import numpy as np

from cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from core import STAGES, Core, ExperimentConfig, run_pipeline
from errors import ConfigError, StageError
from evaluation import aggregate, mpjpe
from factories import get_config
from schema import read_hypotheses, read_poses, read_predictions
from state import STATUS_DONE, STATUS_FAILED
from studies import run_study
from testkit import collect_tests, run_table


def _tiny(out_dir: str, **top) -> dict:
    cfg = {
        "seed": 7,
        "out_dir": out_dir,
        "progress": False,
        "data": {"skeleton": "desk8", "n_train": 12, "n_test": 4, "L": 1, "d": 8, "noise_std_2d": 1.0},
        "denoiser": {"d": 8, "heads": 2, "n_p2c": 1, "n_j2j": 1},
        "train": {"T": 20, "beta_end": 0.2, "epochs": 2, "batch_size": 4},
        "sampler": {"H": 3, "K": 4},
        "eval": {"strategy": "M", "study_H": [1, 3], "study_recall": [1.0, 0.5]},
    }
    cfg.update(top)
    return cfg


def _write_config(tmp: str, name: str = "config.json", **top) -> str:
    path = os.path.join(tmp, name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_tiny(os.path.join(tmp, "run"), **top), f)
    return path


def _config(tmp: str, **overrides) -> ExperimentConfig:
    return get_config(_write_config(tmp), overrides=overrides, use_env=False)


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


# ===========================================================================
# 설정
# ===========================================================================

def test_config_precedence():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp)
        cfg = get_config(path, preset="desk", overrides={"seed": 11, "sampler": {"H": 5}}, use_env=False)
    # 파일이 프리셋을 덮어쓰고, overrides가 파일을 덮어쓴다
    assert cfg.denoiser.d == 8 and cfg.denoiser.heads == 2
    assert cfg.seed == 11 and cfg.train.seed == 11 and cfg.sampler.seed == 11
    assert cfg.sampler.H == 5 and cfg.sampler.K == 4
    assert cfg.preset == "desk"


def test_config_without_preset_is_desk_scale():
    cfg = get_config(None, use_env=False)
    assert cfg.preset == "desk"
    assert cfg.data.skeleton == "desk8" and cfg.data.L == 4 and cfg.data.d == 32
    assert cfg.denoiser.d == 32 and cfg.denoiser.heads == 2
    assert cfg.denoiser.n_p2c == 2 and cfg.denoiser.n_j2j == 2
    full = get_config(None, preset="full", use_env=False)
    assert full.data.skeleton == "h36m17" and full.denoiser.d == 128 and full.denoiser.n_j2j == 4


def test_config_hash_stable():
    with tempfile.TemporaryDirectory() as tmp:
        a = _config(tmp)
        b = _config(tmp)
        c = _config(tmp, seed=8)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_config_missing_file():
    try:
        get_config("/nonexistent/liftkit.json", use_env=False)
    except ConfigError:
        return
    raise AssertionError("missing config file accepted")


def test_config_unknown_key():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp, bogus=1)
        try:
            get_config(path, use_env=False)
        except ConfigError:
            return
    raise AssertionError("unknown key accepted")


def test_config_unknown_preset():
    try:
        get_config(None, preset="huge", use_env=False)
    except ValueError:
        return
    raise AssertionError("unknown preset accepted")


def test_config_validation_errors():
    bad = [
        {"sampler": {"K": 50}},                       # K > T
        {"data": {"d": 16}},                          # data.d != denoiser.d
        {"denoiser": {"heads": 5}},                   # 토큰 크기가 heads로 안 나눠짐
        {"eval": {"strategy": "X"}},
        {"data": {"train_path": "/nonexistent/train.jsonl", "test_path": "/nonexistent/test.jsonl"}},
    ]
    with tempfile.TemporaryDirectory() as tmp:
        lone = os.path.join(tmp, "train.jsonl")
        open(lone, "w", encoding="utf-8").close()
        bad.append({"data": {"train_path": lone}})   # test_path 없이 train_path만
        for override in bad:
            try:
                _config(tmp, **override)
            except ConfigError:
                continue
            raise AssertionError(f"invalid config accepted: {override}")


# ===========================================================================
# 파이프라인
# ===========================================================================

def test_pipeline_artifacts_and_manifest():
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(tmp)
        core = Core(config)
        report = core.run()
        layout = core.layout

        for path in (layout.train_data, layout.test_data, layout.checkpoint, layout.hypotheses,
                     layout.predictions("M"), layout.confidence_csv("M"), layout.report_json,
                     layout.report_csv, core.storage.path):
            assert os.path.exists(path), path

        assert report.frame_count == 4
        assert report.mpjpe_mm >= 0.0 and 0.0 <= report.pck150 <= 100.0

        sets = read_hypotheses(layout.hypotheses)
        assert [hs.H for hs in sets] == [3] * 4
        preds = read_predictions(layout.predictions("M"))
        assert [p.frame_id for p in preds] == [s.sample_id for s in read_poses(layout.test_data)]

        manifest = core.storage.load()
        assert manifest.config_hash == config.config_hash()
        assert manifest.seed == 7
        for stage in STAGES:
            assert manifest.stage_status(stage) == STATUS_DONE, stage
        assert len(manifest.stages["train"]["losses"]) == 2
        assert manifest.artifacts()["train.checkpoint"] == layout.checkpoint


def test_pipeline_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(tmp)
        out_dir = config.out_dir

        report_a, manifest_a = run_pipeline(config)
        files = ("reports/report.json", "ckpt/model.ckpt", "hyp/test.jsonl", "agg/pred_M.jsonl", "manifest.json")
        first = {name: _read(os.path.join(out_dir, name)) for name in files}

        shutil.rmtree(out_dir)
        report_b, manifest_b = run_pipeline(_config(tmp))
        second = {name: _read(os.path.join(out_dir, name)) for name in files}

    assert report_a.to_dict() == report_b.to_dict()
    assert manifest_a.config_hash == manifest_b.config_hash
    for name in files:
        assert first[name] == second[name], f"{name} differs between runs"


def test_pipeline_stage_failure_recorded():
    with tempfile.TemporaryDirectory() as tmp:
        core = Core(_config(tmp))
        bad_ckpt = os.path.join(tmp, "bad.ckpt")
        with open(bad_ckpt, "wb") as f:
            f.write(b"not a checkpoint")
        try:
            core.train(resume=bad_ckpt)
        except StageError as e:
            assert e.stage == "train"
        else:
            raise AssertionError("corrupt resume checkpoint accepted")

        manifest = core.storage.load()
        assert manifest.stage_status("gen-data") == STATUS_DONE
        assert manifest.stage_status("train") == STATUS_FAILED
        assert manifest.failed_stage == "train"
        assert "CheckpointFormatError" in manifest.stages["train"]["error"]


def test_pipeline_existing_data_files():
    with tempfile.TemporaryDirectory() as tmp:
        source = Core(_config(tmp))
        train_set, test_set = source.generate_data()

        config = _config(tmp, out_dir=os.path.join(tmp, "reuse"), data={
            "train_path": source.layout.train_data, "test_path": source.layout.test_data,
        })
        core = Core(config)
        loaded_train, loaded_test = core.generate_data()
        assert [s.sample_id for s in loaded_train] == [s.sample_id for s in train_set]
        assert [s.sample_id for s in loaded_test] == [s.sample_id for s in test_set]

        # 전체 실행도 외부 파일만으로 끝나야 한다
        report = Core(config).run()
        assert report.frame_count == len(test_set), f"frames {report.frame_count}"
        assert not os.path.exists(core.layout.test_data)
        assert not os.path.exists(core.layout.train_data)


# ===========================================================================
# 스터디
# ===========================================================================

def test_study_hypotheses_and_confidence():
    with tempfile.TemporaryDirectory() as tmp:
        core = Core(_config(tmp))
        core.run()

        rows, csv_path = run_study(core, "hypotheses")
        assert len(rows) == 2 * 5
        assert {r["H"] for r in rows} == {1, 3}
        # H=1이면 모든 전략이 같은 가설을 고른다
        h1 = [r["mpjpe_mm"] for r in rows if r["H"] == 1]
        assert max(h1) - min(h1) < 1e-9
        assert os.path.exists(csv_path) and os.path.exists(os.path.splitext(csv_path)[0] + ".json")

        rows, csv_path = run_study(core, "confidence")
        assert [r["recall"] for r in rows] == [1.0, 0.5]
        assert rows[0]["kept_frames"] == 4 and rows[1]["kept_frames"] == 2
        assert abs(rows[0]["mpjpe_kept_mm"] - rows[0]["mpjpe_all_mm"]) < 1e-9
        with open(csv_path, newline="", encoding="utf-8") as f:
            assert len(list(csv.DictReader(f))) == 2


def test_study_confidence_uses_configured_strategy():
    with tempfile.TemporaryDirectory() as tmp:
        core = Core(_config(tmp))
        core.run()
        gt_by_id = {s.sample_id: s.pose3d for s in core.test_set}
        for strategy in ("M", "A"):
            core.config.eval.strategy = strategy
            rows, _ = run_study(core, "confidence")
            expected = np.mean([
                mpjpe(aggregate(hs, strategy).pose, gt_by_id[hs.frame_id]) for hs in core.hypothesis_sets
            ])
            assert abs(rows[0]["mpjpe_all_mm"] - expected) < 1e-9, f"{strategy}: {rows[0]['mpjpe_all_mm']} vs {expected}"
    with tempfile.TemporaryDirectory() as tmp:
        core = Core(_config(tmp, train={"T": 20, "beta_end": 0.2, "epochs": 1, "batch_size": 4}))
        rows, _ = run_study(core, "ablation")
        assert [r["condition"] for r in rows] == ["pose", "context", "both"]
        for row in rows:
            assert set(row) == {"condition", "A", "M", "B", "Bjoint"}
            assert row["Bjoint"] <= row["B"] + 1e-9
        for condition in ("pose", "context", "both"):
            assert os.path.exists(os.path.join(core.layout.ckpt_dir, f"ablation_{condition}.ckpt"))


def test_study_unknown_kind():
    with tempfile.TemporaryDirectory() as tmp:
        core = Core(_config(tmp))
        try:
            run_study(core, "everything")
        except ConfigError:
            return
    raise AssertionError("unknown study kind accepted")


# ===========================================================================
# CLI
# ===========================================================================

def test_cli_run_and_subcommands():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp)
        out = os.path.join(tmp, "cli_run")
        assert main(["run", "--config", path, "--out", out, "--no-progress"]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "reports", "report.json"))

        ckpt = os.path.join(out, "ckpt", "model.ckpt")
        test_data = os.path.join(out, "data", "test.jsonl")
        hyp = os.path.join(tmp, "hyp.jsonl")
        assert main(["sample", "--config", path, "--ckpt", ckpt, "--data", test_data,
                     "--hypotheses", "2", "--steps", "2", "--out", hyp, "--no-progress"]) == EXIT_OK
        assert [hs.H for hs in read_hypotheses(hyp)] == [2] * 4

        pred = os.path.join(tmp, "pred.jsonl")
        assert main(["aggregate", "--config", path, "--hypotheses", hyp, "--strategy", "Bjoint",
                     "--gt", test_data, "--out", pred]) == EXIT_OK
        assert os.path.exists(os.path.join(tmp, "pred_confidence.csv"))
        assert {p.strategy for p in read_predictions(pred)} == {"Bjoint"}

        report = os.path.join(tmp, "report.json")
        assert main(["eval", "--pred", pred, "--gt", test_data, "--per-action", "--csv", "--out", report]) == EXIT_OK
        with open(report, encoding="utf-8") as f:
            data = json.load(f)
        assert data["frame_count"] == 4
        assert os.path.exists(os.path.join(tmp, "report.csv"))


def test_cli_config_errors_exit_2():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp)
        assert main(["run", "--config", os.path.join(tmp, "missing.json")]) == EXIT_CONFIG
        assert main(["train", "--config", path, "--out", os.path.join(tmp, "o"),
                     "--data", os.path.join(tmp, "missing.jsonl")]) == EXIT_CONFIG
        hyp = os.path.join(tmp, "hyp.jsonl")
        with open(hyp, "w", encoding="utf-8") as f:
            f.write("")
        # Best 계열은 정답 파일이 필요
        assert main(["aggregate", "--config", path, "--hypotheses", hyp, "--strategy", "B",
                     "--out", os.path.join(tmp, "p.jsonl")]) == EXIT_CONFIG


def test_cli_runtime_errors_exit_1():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(tmp)
        bad_ckpt = os.path.join(tmp, "bad.ckpt")
        with open(bad_ckpt, "wb") as f:
            f.write(b"LIFTKIT?garbage")
        data = os.path.join(tmp, "poses.jsonl")
        with open(data, "w", encoding="utf-8") as f:
            f.write("")
        assert main(["sample", "--config", path, "--ckpt", bad_ckpt, "--data", data,
                     "--out", os.path.join(tmp, "h.jsonl")]) == EXIT_RUNTIME
        assert main([]) == EXIT_RUNTIME


def run_all_tests() -> bool:
    return run_table("파이프라인 / CLI 통합 테스트", collect_tests(globals()), verbose="--verbose" in sys.argv)


if __name__ == "__main__":
    sys.exit(0 if run_all_tests() else 1)
