"""
config/metrics.py - 평가/스터디 기준값

PCK 임계값, AUC 임계값 그리드(0~150mm, 5mm 간격, 31점),
가설 수 스윕과 recall 스윕 기본 그리드.
"""
from __future__ import annotations

PCK_THRESHOLD_MM: float = 150.0

# 0mm 끝점 포함
AUC_THRESHOLDS_MM: tuple[float, ...] = tuple(float(t) for t in range(0, 151, 5))

STUDY_H_VALUES: tuple[int, ...] = (1, 5, 10, 20, 40)
STUDY_RECALL_VALUES: tuple[float, ...] = (1.0, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5)

# 조건 어블레이션 표: 행 = 조건, 열 = 집계 방식
ABLATION_CONDITIONS: tuple[str, ...] = ("pose", "context", "both")
ABLATION_COLUMNS: tuple[str, ...] = ("A", "M", "B", "Bjoint")

__all__ = [
    "PCK_THRESHOLD_MM",
    "AUC_THRESHOLDS_MM",
    "STUDY_H_VALUES",
    "STUDY_RECALL_VALUES",
    "ABLATION_CONDITIONS",
    "ABLATION_COLUMNS",
]
