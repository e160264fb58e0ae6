"""
testkit.py - 테스트 파일 공용 러너 & 픽스처 헬퍼

각 test_*.py의 run_all_tests()가 (이름, 함수) 표를 넘기면 ✓/✗ 표로 출력.
같은 함수들은 pytest로도 수집된다.
"""
from __future__ import annotations

import traceback

import numpy as np

PASS = "✓"
FAIL = "✗"


def run_table(title: str, tests: list[tuple[str, callable]], verbose: bool = False) -> bool:
    passed = 0
    failed = 0
    errors = []

    print("=" * 70)
    print(f"  {title} ({len(tests)}건)")
    print("=" * 70)
    print()

    for name, test_fn in tests:
        try:
            test_fn()
            print(f"  {PASS} {name}")
            passed += 1
        except AssertionError as e:
            print(f"  {FAIL} {name} - {e}")
            failed += 1
            errors.append((name, str(e)))
        except Exception as e:
            print(f"  {FAIL} {name} - ERROR: {type(e).__name__}: {e}")
            if verbose:
                traceback.print_exc()
            failed += 1
            errors.append((name, f"{type(e).__name__}: {e}"))

    print()
    print("-" * 70)
    print(f"  결과: {passed} passed, {failed} failed (총 {len(tests)}건)")
    print("-" * 70)

    if errors:
        print()
        print("  실패 상세:")
        for name, err in errors:
            print(f"    {FAIL} {name}: {err}")

    return failed == 0


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """det +1 무작위 회전행렬 (QR 분해)"""
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def collect_tests(namespace: dict) -> list[tuple[str, callable]]:
    """모듈의 test_* 함수를 선언 순서대로 (이름, 함수) 표로"""
    return [
        (name[len("test_"):].upper().replace("_", "-"), fn)
        for name, fn in namespace.items()
        if name.startswith("test_") and callable(fn)
    ]
