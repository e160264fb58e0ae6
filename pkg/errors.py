"""
errors.py - liftkit 예외 계층

모든 예외는 LiftkitError에서 파생.
CLI는 ConfigError → exit 2, 나머지 LiftkitError → exit 1로 매핑한다.
"""
from __future__ import annotations


class LiftkitError(Exception):
    """liftkit 공통 베이스 예외"""


class ConfigError(LiftkitError, ValueError):
    """설정/전제조건 위반 (계산 시작 전에 검출)"""


class PoseFileError(LiftkitError, ValueError):
    """포즈 컨테이너 파일 파싱 실패

    record_index: 문제 레코드 번호 (0부터). 헤더 오류면 None.
    """

    def __init__(self, message: str, record_index: int | None = None):
        self.record_index = record_index
        where = "header" if record_index is None else f"record {record_index}"
        super().__init__(f"{where}: {message}")


class CheckpointFormatError(LiftkitError):
    """체크포인트 magic/버전/길이 불일치"""


class NumericalError(LiftkitError, ArithmeticError):
    """비유한(NaN/Inf) 값 검출. stage: 검출 위치 식별자"""

    def __init__(self, message: str, stage: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class TrainingDivergedError(NumericalError):
    """학습 발산 (loss NaN). last_checkpoint: 마지막 정상 체크포인트 경로"""

    def __init__(self, message: str, last_checkpoint: str | None = None):
        self.last_checkpoint = last_checkpoint
        if last_checkpoint:
            message = f"{message} (last good checkpoint: {last_checkpoint})"
        super().__init__(message, stage="loss")


class DataMismatchError(LiftkitError, ValueError):
    """예측/정답 파일의 프레임 id 또는 개수 불일치"""


class DegenerateAlignmentError(LiftkitError, ValueError):
    """Procrustes 정렬 불가 (모든 관절이 한 점에 겹침)"""


class StageError(LiftkitError):
    """파이프라인 단계 실패 래퍼"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
