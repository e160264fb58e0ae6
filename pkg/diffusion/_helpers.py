"""
diffusion/_helpers.py - 시드 파생 & 수치 검사 유틸리티

여러 Mixin에서 공유하는 순수 함수 모음.
"""
from __future__ import annotations

import numpy as np

try:
    from ..errors import NumericalError
except ImportError:
    from errors import NumericalError


def derive_seed(seed: int, *keys: int) -> int:
    """(seed, keys...) → 독립 하위 시드 (SeedSequence 엔트로피 혼합)"""
    return int(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1, np.uint64)[0])


def hypothesis_rng(seed: int, h: int) -> np.random.Generator:
    """가설 h 전용 RNG 스트림

    가설 h의 초기 노이즈는 (seed, h)에만 의존하므로 H개 세트의 앞 H'개는
    H' 샘플링 결과와 같다.
    """
    return np.random.default_rng([int(seed), int(h)])


def frame_seed(seed: int, frame_index: int) -> int:
    return derive_seed(seed, frame_index)


def check_finite(arr: np.ndarray, stage: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite activation ({np.count_nonzero(~np.isfinite(arr))} entries)", stage)
    return arr


def global_norm(grads: dict[str, np.ndarray]) -> float:
    """선언 순서대로 제곱합 (축약 순서 고정)"""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    return float(np.sqrt(total))


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return {k: (g * scale).astype(g.dtype, copy=False) for k, g in grads.items()}, norm
