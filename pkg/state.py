"""
state.py - 실행 매니페스트 관리

파이프라인 실행 상태(설정, 설정 해시, 시드, 라이브러리 버전, 단계별 상태와 산출물)를
저장/관리하는 데이터 클래스. 단계가 끝날 때마다 저장하므로 실패한 단계가 있어도
그 단계 이름이 남은 부분 매니페스트가 디스크에 있다.

타임스탬프는 기록하지 않는다 (같은 설정 재실행 → 같은 manifest.json).
"""
from __future__ import annotations

import json
import os
import platform
from dataclasses import dataclass, field
from typing import Any

import numpy as np

try:
    from .config import LIFTKIT_VERSION
except ImportError:
    from config import LIFTKIT_VERSION

MANIFEST_FILE = "manifest.json"

STATUS_PENDING = "pending"
STATUS_RUNNING = "running"
STATUS_DONE = "done"
STATUS_FAILED = "failed"


def library_versions() -> dict[str, str]:
    return {"python": platform.python_version(), "numpy": np.__version__, "liftkit": LIFTKIT_VERSION}


@dataclass
class RunManifest:
    """한 번의 파이프라인 실행 기록"""

    config: dict[str, Any]
    config_hash: str
    seed: int
    versions: dict[str, str] = field(default_factory=library_versions)
    stages: dict[str, dict] = field(default_factory=dict)

    # --- 단계 상태 ---

    def start_stage(self, stage: str) -> None:
        self.stages[stage] = {"status": STATUS_RUNNING, "artifacts": {}}

    def finish_stage(self, stage: str, artifacts: dict[str, str] | None = None, **info: Any) -> None:
        entry = self.stages.setdefault(stage, {"artifacts": {}})
        entry["status"] = STATUS_DONE
        entry["artifacts"].update(artifacts or {})
        entry.update(info)

    def fail_stage(self, stage: str, error: BaseException) -> None:
        entry = self.stages.setdefault(stage, {"artifacts": {}})
        entry["status"] = STATUS_FAILED
        entry["error"] = f"{type(error).__name__}: {error}"

    def stage_status(self, stage: str) -> str:
        return self.stages.get(stage, {}).get("status", STATUS_PENDING)

    @property
    def failed_stage(self) -> str | None:
        for name, entry in self.stages.items():
            if entry.get("status") == STATUS_FAILED:
                return name
        return None

    def artifacts(self) -> dict[str, str]:
        """모든 단계 산출물 경로 (키: "stage.name")"""
        return {f"{stage}.{k}": v for stage, e in self.stages.items() for k, v in e.get("artifacts", {}).items()}

    # --- 직렬화 ---

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "versions": self.versions,
            "stages": self.stages,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            config=data["config"],
            config_hash=data["config_hash"],
            seed=data["seed"],
            versions=data.get("versions", {}),
            stages=data.get("stages", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, json_str: str) -> "RunManifest":
        return cls.from_dict(json.loads(json_str))


class ManifestStorage:
    """매니페스트 저장소 추상 클래스"""

    def save(self, manifest: RunManifest) -> str:
        raise NotImplementedError

    def load(self) -> RunManifest | None:
        raise NotImplementedError

    def exists(self) -> bool:
        raise NotImplementedError


class FileManifestStorage(ManifestStorage):
    """출력 디렉토리의 manifest.json"""

    def __init__(self, out_dir: str = "./runs"):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, MANIFEST_FILE)

    def save(self, manifest: RunManifest) -> str:
        # 쓰기 도중 중단돼도 이전 매니페스트가 남도록 교체 방식
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(manifest.to_json())
            f.write("\n")
        os.replace(tmp, self.path)
        return self.path

    def load(self) -> RunManifest | None:
        if not os.path.exists(self.path):
            return None
        with open(self.path, "r", encoding="utf-8") as f:
            return RunManifest.from_json(f.read())

    def exists(self) -> bool:
        return os.path.exists(self.path)


def get_storage(backend: str = "file", **kwargs) -> ManifestStorage:
    """백엔드 타입에 따른 저장소 인스턴스 반환"""
    if backend == "file":
        return FileManifestStorage(kwargs.get("out_dir", "./runs"))
    raise ValueError(f"지원하지 않는 백엔드: {backend}")
