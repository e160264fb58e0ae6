"""
schema/checkpoint.py - 바이너리 체크포인트 포맷

레이아웃 (little-endian):
  MAGIC (8 bytes) | version (uint32) | meta_len (uint64) | meta JSON (UTF-8, 정렬된 키)
  | 파라미터 블록 (선언 순서, param_dtype)
  | 스케줄 배열 (float64: betas, alphas, alpha_bars, posterior_betas)
  | 옵티마이저 모멘트 (m 전체, v 전체, 파라미터 선언 순서, param_dtype)

메타데이터에 형태/설정/RNG 상태가 모두 들어가므로 기본값 없이 로드 가능.
직렬화가 정규형이라 save → load → save 결과가 바이트 단위로 같다.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    from ..errors import CheckpointFormatError
except ImportError:
    from errors import CheckpointFormatError

logger = logging.getLogger(__name__)

MAGIC = b"LIFTKIT\x00"
CHECKPOINT_VERSION = 1
SCHEDULE_ARRAYS: tuple[str, ...] = ("betas", "alphas", "alpha_bars", "posterior_betas")
_PREFIX = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    """자기 완결 체크포인트 (외부 기본값 없이 로드 가능)"""
    params: dict[str, np.ndarray]
    schedule: dict[str, np.ndarray]
    denoiser_config: dict
    train_config: dict
    skeleton: dict
    optimizer_step: int = 0
    optimizer_m: dict[str, np.ndarray] = field(default_factory=dict)
    optimizer_v: dict[str, np.ndarray] = field(default_factory=dict)
    epoch: int = 0
    lr: float = 0.0
    rng_state: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def param_dtype(self) -> np.dtype:
        first = next(iter(self.params.values()))
        return first.dtype


def _canonical_json(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("utf-8")


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dtype = np.dtype(ckpt.param_dtype).newbyteorder("<")
    order = list(ckpt.params)
    T = int(len(ckpt.schedule["betas"]))
    has_moments = bool(ckpt.optimizer_m)

    meta = {
        "param_order": order,
        "param_shapes": {k: list(ckpt.params[k].shape) for k in order},
        "param_dtype": dtype.str,
        "T": T,
        "has_moments": has_moments,
        "denoiser_config": ckpt.denoiser_config,
        "train_config": ckpt.train_config,
        "skeleton": ckpt.skeleton,
        "optimizer_step": int(ckpt.optimizer_step),
        "epoch": int(ckpt.epoch),
        "lr": float(ckpt.lr),
        "rng_state": ckpt.rng_state,
        "extra": ckpt.extra,
    }
    meta_bytes = _canonical_json(meta)

    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, CHECKPOINT_VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        for k in order:
            f.write(np.ascontiguousarray(ckpt.params[k], dtype=dtype).tobytes())
        for name in SCHEDULE_ARRAYS:
            arr = np.asarray(ckpt.schedule[name], dtype="<f8")
            if arr.shape != (T,):
                raise ValueError(f"schedule array '{name}' has shape {arr.shape}, expected ({T},)")
            f.write(arr.tobytes())
        if has_moments:
            for moments in (ckpt.optimizer_m, ckpt.optimizer_v):
                for k in order:
                    f.write(np.ascontiguousarray(moments[k], dtype=dtype).tobytes())

    logger.info(f"체크포인트 저장: epoch={ckpt.epoch} → {path}")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < _PREFIX.size:
        raise CheckpointFormatError(f"{path}: truncated file ({len(blob)} bytes)")
    magic, version, meta_len = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic bytes {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})")
    offset = _PREFIX.size
    if len(blob) < offset + meta_len:
        raise CheckpointFormatError(f"{path}: truncated metadata block")
    try:
        meta = json.loads(blob[offset:offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path}: corrupted metadata: {e}") from e
    offset += meta_len

    dtype = np.dtype(meta["param_dtype"])
    order = meta["param_order"]
    shapes = {k: tuple(meta["param_shapes"][k]) for k in order}
    T = int(meta["T"])
    n_param = sum(int(np.prod(s)) for s in shapes.values())
    expected = offset + n_param * dtype.itemsize + len(SCHEDULE_ARRAYS) * T * 8
    if meta["has_moments"]:
        expected += 2 * n_param * dtype.itemsize
    if len(blob) != expected:
        raise CheckpointFormatError(f"{path}: size {len(blob)} != expected {expected} (truncated or padded)")

    def take(shape: tuple[int, ...], dt: np.dtype) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype=dt, count=count, offset=offset).reshape(shape)
        offset += count * dt.itemsize
        return arr.astype(dt.newbyteorder("="), copy=True)

    params = {k: take(shapes[k], dtype) for k in order}
    schedule = {name: take((T,), np.dtype("<f8")) for name in SCHEDULE_ARRAYS}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    if meta["has_moments"]:
        m = {k: take(shapes[k], dtype) for k in order}
        v = {k: take(shapes[k], dtype) for k in order}

    return Checkpoint(
        params=params,
        schedule=schedule,
        denoiser_config=meta["denoiser_config"],
        train_config=meta["train_config"],
        skeleton=meta["skeleton"],
        optimizer_step=meta["optimizer_step"],
        optimizer_m=m,
        optimizer_v=v,
        epoch=meta["epoch"],
        lr=meta["lr"],
        rng_state=meta["rng_state"],
        extra=meta["extra"],
    )


__all__ = [
    "MAGIC",
    "CHECKPOINT_VERSION",
    "SCHEDULE_ARRAYS",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
