"""
schema/poses.py - 포즈 컨테이너 파일 포맷

한 줄 JSON 헤더 + 샘플당 한 줄 JSON 레코드 (JSONL).
  dataset     : {sample_id, action_tag, pose3d, pose2d, features}
  hypotheses  : {frame_id, action_tag, hypotheses}            (H 포즈/레코드)
  predictions : {frame_id, action_tag, pose3d, strategy, chosen_index, confidence}

실수는 유효숫자 9자리로 직렬화. features는 little-endian float32 블록의 base64.
"""
from __future__ import annotations

import base64
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

import numpy as np

try:
    from ..errors import PoseFileError
    from ..pose._types import ConditioningFeatures, HypothesisSet, PoseSample
except ImportError:
    from errors import PoseFileError
    from pose._types import ConditioningFeatures, HypothesisSet, PoseSample

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
FLOAT_DIGITS = 9
FEATURE_DTYPE = "<f4"

KIND_DATASET = "dataset"
KIND_HYPOTHESES = "hypotheses"
KIND_PREDICTIONS = "predictions"

HEADER_KEYS: dict[str, tuple[str, ...]] = {
    KIND_DATASET: ("version", "kind", "J", "L", "d", "count"),
    KIND_HYPOTHESES: ("version", "kind", "J", "H", "count", "sampler"),
    KIND_PREDICTIONS: ("version", "kind", "J", "count", "strategy"),
}


@dataclass(frozen=True)
class PredictionRecord:
    """집계 결과 파일의 한 레코드"""
    frame_id: str
    pose3d: np.ndarray
    strategy: str
    chosen_index: int | None = None
    confidence: float | None = None
    action_tag: str | None = None


# =============================================================================
# 직렬화 유틸리티
# =============================================================================

def _round_floats(values: np.ndarray) -> list:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to serialize non-finite values")
    return np.vectorize(lambda v: float(f"{v:.{FLOAT_DIGITS}g}"), otypes=[object])(arr).tolist()


def encode_features(tensor: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(tensor, dtype=FEATURE_DTYPE).tobytes()).decode("ascii")


def decode_features(text: str, shape: tuple[int, ...]) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ValueError(f"feature block has {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype=FEATURE_DTYPE).reshape(shape).astype(np.float32)


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def _write_lines(path: str | Path, header: dict, records: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dumps(header) + "\n")
        for rec in records:
            f.write(_dumps(rec) + "\n")


def _iter_lines(path: str | Path, kind: str) -> tuple[dict, Iterator[tuple[int, dict]]]:
    """헤더 검증 후 (header, (index, record) 이터레이터) 반환"""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().split("\n") if line.strip()]
    if not lines:
        raise PoseFileError("empty file (missing header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise PoseFileError(f"malformed header JSON: {e}") from e
    if not isinstance(header, dict):
        raise PoseFileError("header must be a JSON object")
    missing = [k for k in HEADER_KEYS[kind] if k not in header]
    if missing:
        raise PoseFileError(f"header missing keys {missing}")
    if header["kind"] != kind:
        raise PoseFileError(f"expected a '{kind}' file, got '{header['kind']}'")
    if header["version"] != FORMAT_VERSION:
        raise PoseFileError(f"unsupported format version {header['version']}")
    body = lines[1:]
    if len(body) != header["count"]:
        raise PoseFileError(f"header count {header['count']} != {len(body)} records")

    def records() -> Iterator[tuple[int, dict]]:
        for i, line in enumerate(body):
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise PoseFileError(f"malformed JSON: {e}", record_index=i) from e
            if not isinstance(rec, dict):
                raise PoseFileError("record must be a JSON object", record_index=i)
            yield i, rec

    return header, records()


def _array_field(rec: dict, key: str, shape: tuple[int, ...], index: int) -> np.ndarray:
    if key not in rec:
        raise PoseFileError(f"missing field '{key}'", record_index=index)
    try:
        arr = np.asarray(rec[key], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise PoseFileError(f"field '{key}' is not numeric: {e}", record_index=index) from e
    if arr.shape != shape:
        raise PoseFileError(f"field '{key}' shape {arr.shape} != {shape}", record_index=index)
    if not np.all(np.isfinite(arr)):
        raise PoseFileError(f"field '{key}' has non-finite values", record_index=index)
    return arr


# =============================================================================
# dataset
# =============================================================================

def write_poses(path: str | Path, poses: list[PoseSample], *, J: int | None = None,
                L: int | None = None, d: int | None = None) -> None:
    """데이터셋 저장. 빈 리스트면 J/L/d를 인자로 받아 헤더만 기록."""
    if poses:
        first = poses[0].features
        J, L, d = poses[0].J, first.L, first.d
    header = {"version": FORMAT_VERSION, "kind": KIND_DATASET,
              "J": int(J or 0), "L": int(L or 0), "d": int(d or 0), "count": len(poses)}
    records = []
    for s in poses:
        if s.J != header["J"] or s.features.tensor.shape != (header["L"] + 1, header["J"], header["d"]):
            raise ValueError(f"{s.sample_id}: shape differs from the first sample")
        records.append({
            "sample_id": s.sample_id,
            "action_tag": s.action_tag,
            "pose3d": _round_floats(s.pose3d),
            "pose2d": _round_floats(s.pose2d),
            "features": encode_features(s.features.tensor),
        })
    _write_lines(path, header, records)
    logger.info(f"데이터셋 저장: {len(poses)}건 → {path}")


def read_poses(path: str | Path) -> list[PoseSample]:
    header, records = _iter_lines(path, KIND_DATASET)
    J, L, d = header["J"], header["L"], header["d"]
    samples = []
    for i, rec in records:
        pose3d = _array_field(rec, "pose3d", (J, 3), i)
        pose2d = _array_field(rec, "pose2d", (J, 2), i)
        try:
            tensor = decode_features(rec["features"], (L + 1, J, d))
        except (KeyError, ValueError, TypeError) as e:
            raise PoseFileError(f"bad features block: {e}", record_index=i) from e
        if not np.all(np.isfinite(tensor)):
            raise PoseFileError("features have non-finite values", record_index=i)
        samples.append(PoseSample(
            sample_id=str(rec.get("sample_id", i)),
            pose3d=pose3d,
            pose2d=pose2d,
            features=ConditioningFeatures(tensor),
            action_tag=rec.get("action_tag"),
        ))
    return samples


# =============================================================================
# hypotheses
# =============================================================================

def write_hypotheses(path: str | Path, sets: list[HypothesisSet], *, sampler: dict | None = None) -> None:
    J = sets[0].J if sets else 0
    H = sets[0].H if sets else 0
    sampler = dict(sampler if sampler is not None else (sets[0].sampler_config if sets else {}))
    header = {"version": FORMAT_VERSION, "kind": KIND_HYPOTHESES,
              "J": J, "H": H, "count": len(sets), "sampler": sampler}
    records = []
    for hs in sets:
        if hs.J != J or hs.H != H:
            raise ValueError(f"{hs.frame_id}: hypothesis set shape differs from the first frame")
        records.append({
            "frame_id": hs.frame_id,
            "action_tag": hs.action_tag,
            "hypotheses": _round_floats(hs.hypotheses),
        })
    _write_lines(path, header, records)
    logger.info(f"가설 저장: {len(sets)} 프레임 × H={H} → {path}")


def read_hypotheses(path: str | Path) -> list[HypothesisSet]:
    header, records = _iter_lines(path, KIND_HYPOTHESES)
    J, H, sampler = header["J"], header["H"], header["sampler"]
    sets = []
    for i, rec in records:
        hyp = _array_field(rec, "hypotheses", (H, J, 3), i)
        sets.append(HypothesisSet(
            frame_id=str(rec.get("frame_id", i)),
            hypotheses=hyp,
            sampler_config=sampler,
            action_tag=rec.get("action_tag"),
        ))
    return sets


# =============================================================================
# predictions
# =============================================================================

def write_predictions(path: str | Path, preds: list[PredictionRecord], *, strategy: str) -> None:
    J = int(np.asarray(preds[0].pose3d).shape[0]) if preds else 0
    header = {"version": FORMAT_VERSION, "kind": KIND_PREDICTIONS,
              "J": J, "count": len(preds), "strategy": strategy}
    records: list[dict[str, Any]] = []
    for p in preds:
        conf = None if p.confidence is None else float(f"{p.confidence:.{FLOAT_DIGITS}g}")
        if conf is not None and not math.isfinite(conf):
            raise ValueError(f"{p.frame_id}: non-finite confidence")
        records.append({
            "frame_id": p.frame_id,
            "action_tag": p.action_tag,
            "pose3d": _round_floats(p.pose3d),
            "strategy": p.strategy,
            "chosen_index": p.chosen_index,
            "confidence": conf,
        })
    _write_lines(path, header, records)


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    header, records = _iter_lines(path, KIND_PREDICTIONS)
    J = header["J"]
    preds = []
    for i, rec in records:
        preds.append(PredictionRecord(
            frame_id=str(rec.get("frame_id", i)),
            pose3d=_array_field(rec, "pose3d", (J, 3), i),
            strategy=str(rec.get("strategy", header["strategy"])),
            chosen_index=rec.get("chosen_index"),
            confidence=rec.get("confidence"),
            action_tag=rec.get("action_tag"),
        ))
    return preds


__all__ = [
    "FORMAT_VERSION",
    "KIND_DATASET",
    "KIND_HYPOTHESES",
    "KIND_PREDICTIONS",
    "PredictionRecord",
    "encode_features",
    "decode_features",
    "write_poses",
    "read_poses",
    "write_hypotheses",
    "read_hypotheses",
    "write_predictions",
    "read_predictions",
]
