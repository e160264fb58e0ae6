"""
core.py - 실험 설정 & 파이프라인 레이어

ExperimentConfig: 데이터/디노이저/학습/샘플러/평가 설정 트리
  우선순위 (낮음 → 높음): 기본값 → 스케일 프리셋 → JSON 설정 파일 → 환경변수(.env) → CLI 플래그
Core: gen-data → train → sample → aggregate → eval 단계 실행 + 단계별 매니페스트 저장

산출물 레이아웃 (--out 하위):
  data/train.jsonl, data/test.jsonl
  ckpt/model.ckpt, ckpt/last.ckpt
  hyp/test.jsonl
  agg/pred_<S>.jsonl, agg/confidence_<S>.csv
  reports/report.json, reports/report.csv
  manifest.json
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

try:
    from .config import (
        AGGREGATION_STRATEGIES, ARTIFACT_DIRS, DATA_DEFAULTS, DEFAULT_PRESET, SCALE_PRESETS,
        STUDY_H_VALUES, STUDY_RECALL_VALUES,
    )
    from .diffusion import LiftEngine
    from .diffusion._helpers import derive_seed, frame_seed
    from .diffusion._types import ConfigSection, DenoiserConfig, SamplerConfig, TrainConfig
    from .errors import ConfigError, StageError
    from .evaluation import MetricReport, aggregate, evaluate, report_to_csv
    from .pose import Camera, HypothesisSet, PoseSample, build_skeleton, generate_synthetic_dataset
    from .schema import (
        PredictionRecord, read_hypotheses, read_poses, write_hypotheses, write_poses, write_predictions,
    )
    from .state import RunManifest, get_storage
except ImportError:
    from config import (
        AGGREGATION_STRATEGIES, ARTIFACT_DIRS, DATA_DEFAULTS, DEFAULT_PRESET, SCALE_PRESETS,
        STUDY_H_VALUES, STUDY_RECALL_VALUES,
    )
    from diffusion import LiftEngine
    from diffusion._helpers import derive_seed, frame_seed
    from diffusion._types import ConfigSection, DenoiserConfig, SamplerConfig, TrainConfig
    from errors import ConfigError, StageError
    from evaluation import MetricReport, aggregate, evaluate, report_to_csv
    from pose import Camera, HypothesisSet, PoseSample, build_skeleton, generate_synthetic_dataset
    from schema import (
        PredictionRecord, read_hypotheses, read_poses, write_hypotheses, write_poses, write_predictions,
    )
    from state import RunManifest, get_storage

logger = logging.getLogger(__name__)

STAGES = ("gen-data", "train", "sample", "aggregate", "eval")

# 데이터 분할별 시드 파생 키
_TRAIN_DATA_KEY = 1
_TEST_DATA_KEY = 2


# =============================================================================
# 설정
# =============================================================================

@dataclass
class DataConfig(ConfigSection):
    """합성 데이터 생성 설정. train_path/test_path를 주면 생성 대신 파일 사용"""
    skeleton: str = DATA_DEFAULTS["skeleton"]
    n_train: int = DATA_DEFAULTS["n_train"]
    n_test: int = DATA_DEFAULTS["n_test"]
    noise_std_2d: float = DATA_DEFAULTS["noise_std_2d"]
    L: int = DATA_DEFAULTS["L"]
    d: int = DATA_DEFAULTS["d"]
    context_seed: int = DATA_DEFAULTS["context_seed"]
    camera: dict = field(default_factory=lambda: copy.deepcopy(DATA_DEFAULTS["camera"]))
    actions: list[str] | None = None
    train_path: str | None = None
    test_path: str | None = None


@dataclass
class EvalConfig(ConfigSection):
    strategy: str = "M"
    per_action: bool = True
    subset_path: str | None = None
    csv: bool = True
    study_H: list[int] = field(default_factory=lambda: list(STUDY_H_VALUES))
    study_recall: list[float] = field(default_factory=lambda: list(STUDY_RECALL_VALUES))


_SECTIONS: dict[str, type] = {
    "data": DataConfig,
    "denoiser": DenoiserConfig,
    "train": TrainConfig,
    "sampler": SamplerConfig,
    "eval": EvalConfig,
}


def _deep_merge(base: dict, update: dict) -> dict:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def _env_bool(value: str) -> bool:
    return value.strip().lower() not in ("0", "false", "no", "off", "")


@dataclass
class ExperimentConfig:
    """실험 설정 트리

    seed는 전역 시드: train.seed / sampler.seed는 항상 이 값을 따른다
    (벽시계 시드 없음).
    """
    seed: int = 0
    out_dir: str = "runs/default"
    preset: str | None = None
    progress: bool = True
    data: DataConfig = field(default_factory=DataConfig)
    denoiser: DenoiserConfig = field(default_factory=DenoiserConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        self.sync_seeds()

    def sync_seeds(self) -> None:
        self.train.seed = self.seed
        self.sampler.seed = self.seed

    # --- 직렬화 ---

    def to_dict(self) -> dict:
        data = {"seed": self.seed, "out_dir": self.out_dir, "preset": self.preset, "progress": self.progress}
        for name in _SECTIONS:
            data[name] = getattr(self, name).to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        top = {"seed", "out_dir", "preset", "progress"}
        unknown = set(data) - top - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: data[k] for k in top if k in data}
        for name, section in _SECTIONS.items():
            if name in data:
                kwargs[name] = section.from_dict(data[name])
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"invalid config: {e}") from e

    def config_hash(self) -> str:
        """정규 JSON (정렬된 키)의 SHA-256"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # --- 로드 ---

    @classmethod
    def load(
        cls,
        config_path: str | None = None,
        preset: str | None = None,
        overrides: dict | None = None,
        use_env: bool = True,
    ) -> "ExperimentConfig":
        """기본값 → 프리셋 → 설정 파일 → 환경변수 → overrides 순으로 병합"""
        file_data: dict = {}
        if config_path:
            if not os.path.exists(config_path):
                raise ConfigError(f"config file not found: {config_path}")
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    file_data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file {config_path} is not valid JSON: {e}") from e
            if not isinstance(file_data, dict):
                raise ConfigError(f"config file {config_path} must hold a JSON object")

        merged = cls().to_dict()
        preset = preset or file_data.get("preset") or DEFAULT_PRESET
        if preset not in SCALE_PRESETS:
            raise ConfigError(f"unknown preset: {preset} (available: {', '.join(SCALE_PRESETS)})")
        _deep_merge(merged, SCALE_PRESETS[preset])
        _deep_merge(merged, file_data)
        merged["preset"] = preset

        if use_env:
            _deep_merge(merged, cls.env_overrides())
        _deep_merge(merged, overrides or {})
        return cls.from_dict(merged)

    @staticmethod
    def env_overrides() -> dict:
        """LIFTKIT_SEED / LIFTKIT_OUT_DIR / LIFTKIT_PROGRESS (.env 포함)"""
        load_dotenv()
        env: dict[str, Any] = {}
        if os.environ.get("LIFTKIT_SEED"):
            try:
                env["seed"] = int(os.environ["LIFTKIT_SEED"])
            except ValueError as e:
                raise ConfigError(f"LIFTKIT_SEED must be an integer: {os.environ['LIFTKIT_SEED']}") from e
        if os.environ.get("LIFTKIT_OUT_DIR"):
            env["out_dir"] = os.environ["LIFTKIT_OUT_DIR"]
        if "LIFTKIT_PROGRESS" in os.environ:
            env["progress"] = _env_bool(os.environ["LIFTKIT_PROGRESS"])
        return env

    # --- 검증 ---

    def validate(self) -> None:
        """계산 전에 모든 전제조건 검사 (위반 시 ConfigError)"""
        data = self.data
        skeleton = build_skeleton(data.skeleton)
        Camera.from_dict(data.camera)
        if data.n_train < 1 or data.n_test < 1:
            raise ConfigError(f"data.n_train / data.n_test must be >= 1, got {data.n_train} / {data.n_test}")
        if data.noise_std_2d < 0:
            raise ConfigError(f"data.noise_std_2d must be >= 0, got {data.noise_std_2d}")
        if data.L < 0 or data.d < 1:
            raise ConfigError(f"invalid feature geometry L={data.L}, d={data.d}")
        if data.d != self.denoiser.d:
            raise ConfigError(f"data.d={data.d} must equal denoiser.d={self.denoiser.d}")
        if (data.train_path is None) != (data.test_path is None):
            raise ConfigError("data.train_path and data.test_path must be given together")
        for name in ("train_path", "test_path"):
            path = getattr(data, name)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"data.{name} not found: {path}")
        if self.eval.subset_path is not None and not os.path.exists(self.eval.subset_path):
            raise ConfigError(f"eval.subset_path not found: {self.eval.subset_path}")

        self.denoiser.validate()
        self.train.validate()
        self.sampler.validate(T=self.train.T)

        heads = self.denoiser.heads
        p2c_dim = skeleton.J * self.denoiser.d if self.denoiser.channel_tokens == "flatten" else self.denoiser.d
        for stage, dim in (("p2c", p2c_dim), ("j2j", (data.L + 2) * self.denoiser.d)):
            if dim % heads:
                raise ConfigError(f"{stage} token size {dim} is not divisible by denoiser.heads={heads}")

        if self.eval.strategy not in AGGREGATION_STRATEGIES:
            raise ConfigError(f"eval.strategy must be one of {AGGREGATION_STRATEGIES}, got {self.eval.strategy}")
        if any(not 0 < r <= 1 for r in self.eval.study_recall):
            raise ConfigError(f"eval.study_recall values must be in (0, 1], got {self.eval.study_recall}")
        if any(h < 1 for h in self.eval.study_H):
            raise ConfigError(f"eval.study_H values must be >= 1, got {self.eval.study_H}")
        if self.preset is not None and self.preset not in SCALE_PRESETS:
            raise ConfigError(f"unknown preset: {self.preset}")


# =============================================================================
# 산출물 레이아웃
# =============================================================================

@dataclass(frozen=True)
class ArtifactLayout:
    out_dir: str

    def _path(self, kind: str, name: str) -> str:
        return os.path.join(self.out_dir, ARTIFACT_DIRS[kind], name)

    @property
    def train_data(self) -> str:
        return self._path("data", "train.jsonl")

    @property
    def test_data(self) -> str:
        return self._path("data", "test.jsonl")

    @property
    def ckpt_dir(self) -> str:
        return os.path.join(self.out_dir, ARTIFACT_DIRS["ckpt"])

    @property
    def checkpoint(self) -> str:
        return self._path("ckpt", "model.ckpt")

    @property
    def hypotheses(self) -> str:
        return self._path("hyp", "test.jsonl")

    def predictions(self, strategy: str) -> str:
        return self._path("agg", f"pred_{strategy}.jsonl")

    def confidence_csv(self, strategy: str) -> str:
        return self._path("agg", f"confidence_{strategy}.csv")

    @property
    def reports_dir(self) -> str:
        return os.path.join(self.out_dir, ARTIFACT_DIRS["reports"])

    @property
    def report_json(self) -> str:
        return self._path("reports", "report.json")

    @property
    def report_csv(self) -> str:
        return self._path("reports", "report.csv")

    def ensure(self) -> None:
        for sub in ARTIFACT_DIRS.values():
            os.makedirs(os.path.join(self.out_dir, sub), exist_ok=True)


# =============================================================================
# 집계 / 리포트 헬퍼 (CLI 단독 서브커맨드와 공용)
# =============================================================================

def aggregate_hypotheses(
    sets: list[HypothesisSet],
    strategy: str,
    gt_by_id: dict[str, PoseSample] | None = None,
    seed: int = 0,
) -> list[PredictionRecord]:
    """프레임 i의 Random 선택 시드는 derive(seed, i)"""
    preds = []
    for i, hs in enumerate(sets):
        gt = None
        if gt_by_id is not None:
            if hs.frame_id not in gt_by_id:
                raise ConfigError(f"frame {hs.frame_id} has no ground truth")
            gt = gt_by_id[hs.frame_id].pose3d
        result = aggregate(hs, strategy, gt=gt, seed=frame_seed(seed, i))
        preds.append(PredictionRecord(
            frame_id=hs.frame_id,
            pose3d=result.pose,
            strategy=strategy,
            chosen_index=result.chosen_index,
            confidence=result.confidence,
            action_tag=hs.action_tag,
        ))
    missing = sum(1 for p in preds if p.confidence is None)
    if missing:
        logger.warning(f"신뢰도 없는 프레임 {missing}개 (H < 2)")
    return preds


def write_confidence_csv(preds: list[PredictionRecord], path: str) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_id", "action", "confidence", "chosen_index"])
        for p in preds:
            conf = "" if p.confidence is None else f"{p.confidence:.9g}"
            chosen = "" if p.chosen_index is None else p.chosen_index
            writer.writerow([p.frame_id, p.action_tag or "", conf, chosen])
    return path


def write_report(report: MetricReport, json_path: str, csv_path: str | None = None) -> None:
    Path(json_path).parent.mkdir(parents=True, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as f:
        f.write(report.to_json())
        f.write("\n")
    if csv_path:
        report_to_csv(report, csv_path)


def read_subset(path: str | None) -> list[str] | None:
    """한 줄에 frame id 하나 (빈 줄/# 주석 무시)"""
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


# =============================================================================
# 파이프라인
# =============================================================================

class Core:
    """실험 파이프라인 통합 클래스"""

    def __init__(self, config: ExperimentConfig, storage=None):
        config.sync_seeds()
        config.validate()
        self.config = config
        self.layout = ArtifactLayout(config.out_dir)
        self.skeleton = build_skeleton(config.data.skeleton)
        self.camera = Camera.from_dict(config.data.camera)
        self.storage = storage or get_storage("file", out_dir=config.out_dir)
        self.manifest = RunManifest(config=config.to_dict(), config_hash=config.config_hash(), seed=config.seed)

        # 단계 간 메모리 전달
        self.train_set: list[PoseSample] | None = None
        self.test_set: list[PoseSample] | None = None
        self.engine: LiftEngine | None = None
        self.hypothesis_sets: list[HypothesisSet] | None = None

    @contextmanager
    def stage(self, name: str):
        """단계 실행: 시작/성공/실패를 매니페스트에 기록하고 저장"""
        self.layout.ensure()
        self.manifest.start_stage(name)
        self.storage.save(self.manifest)
        try:
            yield
        except Exception as e:
            self.manifest.fail_stage(name, e)
            self.storage.save(self.manifest)
            logger.error(f"단계 '{name}' 실패: {e}")
            raise StageError(name, e) from e
        self.storage.save(self.manifest)

    # --- gen-data ---

    def generate_data(self) -> tuple[list[PoseSample], list[PoseSample]]:
        cfg = self.config.data
        with self.stage("gen-data"):
            if cfg.train_path and cfg.test_path:
                train_set, test_set = read_poses(cfg.train_path), read_poses(cfg.test_path)
                artifacts = {"train": cfg.train_path, "test": cfg.test_path}
            else:
                common = dict(L=cfg.L, d=cfg.d, context_seed=cfg.context_seed, actions=cfg.actions)
                train_set = generate_synthetic_dataset(
                    self.skeleton, cfg.n_train, self.camera, cfg.noise_std_2d,
                    derive_seed(self.config.seed, _TRAIN_DATA_KEY), id_prefix="train", **common,
                )
                test_set = generate_synthetic_dataset(
                    self.skeleton, cfg.n_test, self.camera, cfg.noise_std_2d,
                    derive_seed(self.config.seed, _TEST_DATA_KEY), id_prefix="test", **common,
                )
                write_poses(self.layout.train_data, train_set)
                write_poses(self.layout.test_data, test_set)
                artifacts = {"train": self.layout.train_data, "test": self.layout.test_data}
            self.manifest.finish_stage("gen-data", artifacts, n_train=len(train_set), n_test=len(test_set))
        logger.info(f"데이터셋 준비: train={len(train_set)}, test={len(test_set)}")
        self.train_set, self.test_set = train_set, test_set
        return train_set, test_set

    @property
    def train_data_path(self) -> str:
        """학습 데이터 위치: 외부 파일이 지정되면 그 파일, 아니면 레이아웃 경로"""
        return self.config.data.train_path or self.layout.train_data

    @property
    def test_data_path(self) -> str:
        return self.config.data.test_path or self.layout.test_data

    def _require_data(self) -> None:
        if self.train_set is None or self.test_set is None:
            if os.path.exists(self.train_data_path) and os.path.exists(self.test_data_path):
                self.train_set = read_poses(self.train_data_path)
                self.test_set = read_poses(self.test_data_path)
            else:
                self.generate_data()

    # --- train ---

    def train(self, resume: str | None = None) -> LiftEngine:
        self._require_data()
        with self.stage("train"):
            if resume:
                engine = LiftEngine.load(resume)
            else:
                engine = LiftEngine.create(self.config.denoiser, self.config.train, self.skeleton, self.config.data.L)
            history = engine.train(self.train_set, ckpt_dir=self.layout.ckpt_dir, progress=self.config.progress)
            engine.save(self.layout.checkpoint)
            engine.last_checkpoint = self.layout.checkpoint
            self.manifest.finish_stage(
                "train",
                {"checkpoint": self.layout.checkpoint},
                epochs=engine.epoch,
                final_loss=history[-1].mean_loss if history else None,
                losses=[m.mean_loss for m in history],
            )
        self.engine = engine
        return engine

    def _require_engine(self) -> LiftEngine:
        if self.engine is None:
            if os.path.exists(self.layout.checkpoint):
                self.engine = LiftEngine.load(self.layout.checkpoint)
            else:
                self.train()
        return self.engine

    # --- sample ---

    def sample(self) -> list[HypothesisSet]:
        self._require_data()
        engine = self._require_engine()
        sc = self.config.sampler
        with self.stage("sample"):
            sets = engine.sample_dataset(self.test_set, sc.H, sc.K, sc.seed, sc.variant, progress=self.config.progress)
            write_hypotheses(self.layout.hypotheses, sets, sampler={**sc.to_dict(), "T": engine.schedule.T})
            self.manifest.finish_stage("sample", {"hypotheses": self.layout.hypotheses}, frames=len(sets))
        self.hypothesis_sets = sets
        return sets

    # --- aggregate ---

    def aggregate(self, strategy: str | None = None) -> list[PredictionRecord]:
        strategy = strategy or self.config.eval.strategy
        self._require_data()
        if self.hypothesis_sets is None:
            self.hypothesis_sets = read_hypotheses(self.layout.hypotheses)
        with self.stage("aggregate"):
            gt_by_id = {s.sample_id: s for s in self.test_set}
            preds = aggregate_hypotheses(self.hypothesis_sets, strategy, gt_by_id, seed=self.config.seed)
            write_predictions(self.layout.predictions(strategy), preds, strategy=strategy)
            write_confidence_csv(preds, self.layout.confidence_csv(strategy))
            self.manifest.finish_stage("aggregate", {
                "predictions": self.layout.predictions(strategy),
                "confidence": self.layout.confidence_csv(strategy),
            }, strategy=strategy)
        return preds

    # --- eval ---

    def evaluate(self, strategy: str | None = None) -> MetricReport:
        strategy = strategy or self.config.eval.strategy
        ev = self.config.eval
        with self.stage("eval"):
            report = evaluate(
                self.layout.predictions(strategy),
                self.test_data_path,
                group_by_action=ev.per_action,
                subset=read_subset(ev.subset_path),
            )
            write_report(report, self.layout.report_json, self.layout.report_csv if ev.csv else None)
            artifacts = {"report": self.layout.report_json}
            if ev.csv:
                artifacts["report_csv"] = self.layout.report_csv
            self.manifest.finish_stage("eval", artifacts, mpjpe_mm=report.mpjpe_mm)
        return report

    def run(self) -> MetricReport:
        """gen-data → train → sample → aggregate → eval"""
        self.generate_data()
        self.train()
        self.sample()
        self.aggregate()
        return self.evaluate()


def run_pipeline(config: ExperimentConfig) -> tuple[MetricReport, RunManifest]:
    core = Core(config)
    report = core.run()
    return report, core.manifest
