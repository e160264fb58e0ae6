"""
cli.py - 명령줄 인터페이스

python cli.py <command> 형식으로 실행 (liftkit).

Commands:
- gen-data: 합성 데이터셋 생성 (data/train.jsonl, data/test.jsonl)
- train: 노이즈 예측 모델 학습 (ckpt/model.ckpt)
- sample: 테스트 프레임마다 H개 가설 샘플링 (hyp/test.jsonl)
- aggregate: 가설 집계 + 프레임별 신뢰도 CSV
- eval: MPJPE / P-MPJPE / PCK150 / AUC 리포트
- study: 가설 수 / 신뢰도 / 조건 어블레이션 스터디
- run: gen-data → train → sample → aggregate → eval 전체 실행

종료 코드: 0 성공, 2 설정/검증 오류, 1 실행 오류.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

# 환경변수 로드
load_dotenv()

try:
    from .config import AGGREGATION_STRATEGIES, SAMPLER_VARIANTS, SCALE_PRESETS
    from .core import aggregate_hypotheses, read_subset, write_confidence_csv, write_report
    from .errors import ConfigError, LiftkitError, StageError
    from .evaluation import evaluate
    from .factories import get_config, get_core, get_engine
    from .schema import read_hypotheses, read_poses, write_hypotheses, write_predictions
    from .studies import STUDY_KINDS, run_study
except ImportError:
    from config import AGGREGATION_STRATEGIES, SAMPLER_VARIANTS, SCALE_PRESETS
    from core import aggregate_hypotheses, read_subset, write_confidence_csv, write_report
    from errors import ConfigError, LiftkitError, StageError
    from evaluation import evaluate
    from factories import get_config, get_core, get_engine
    from schema import read_hypotheses, read_poses, write_hypotheses, write_predictions
    from studies import STUDY_KINDS, run_study

# 로깅 설정
logging.basicConfig(
    level=os.environ.get("LIFTKIT_LOG_LEVEL", "WARNING").upper(),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s"
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _overrides(args) -> dict:
    """CLI 플래그 → 중첩 설정 dict (지정된 것만)"""
    o: dict = {}

    def put(section: str | None, key: str, value):
        if value is None:
            return
        if section is None:
            o[key] = value
        else:
            o.setdefault(section, {})[key] = value

    put(None, "seed", getattr(args, "seed", None))
    put(None, "out_dir", getattr(args, "out", None) if getattr(args, "out_is_dir", False) else None)
    put("sampler", "H", getattr(args, "hypotheses_count", None))
    put("sampler", "K", getattr(args, "steps", None))
    put("sampler", "variant", getattr(args, "variant", None))
    put("eval", "strategy", getattr(args, "strategy", None))
    if getattr(args, "no_progress", False):
        o["progress"] = False
    return o


def _load(args):
    return get_config(args.config, preset=args.preset, overrides=_overrides(args))


# =============================================================================
# Commands
# =============================================================================

def cmd_gen_data(args):
    """합성 데이터셋 생성"""
    config = _load(args)
    print(f"🔧 합성 데이터 생성 중... (skeleton={config.data.skeleton}, "
          f"train={config.data.n_train}, test={config.data.n_test})")
    core = get_core(config)
    train_set, test_set = core.generate_data()
    print(f"✅ 데이터셋: {core.train_data_path} ({len(train_set)}), {core.test_data_path} ({len(test_set)})")


def cmd_train(args):
    """모델 학습 (--resume으로 체크포인트에서 이어서)"""
    config = _load(args)
    if args.resume and not os.path.exists(args.resume):
        raise ConfigError(f"resume checkpoint not found: {args.resume}")
    if args.data and not os.path.exists(args.data):
        raise ConfigError(f"training data not found: {args.data}")
    core = get_core(config)
    if args.data:
        core.train_set = read_poses(args.data)
        core.test_set = []
    print(f"🔧 학습 시작: epochs={config.train.epochs}, batch={config.train.batch_size}, lr={config.train.lr_start}")
    engine = core.train(resume=args.resume)
    print(f"✅ 체크포인트 저장: {core.layout.checkpoint} (epoch {engine.epoch})")


def cmd_sample(args):
    """가설 샘플링"""
    config = _load(args)
    for path in (args.ckpt, args.data):
        if path and not os.path.exists(path):
            raise ConfigError(f"file not found: {path}")
    engine = get_engine(config, args.ckpt)
    dataset = read_poses(args.data)
    sc = config.sampler
    sc.validate(T=engine.schedule.T)
    print(f"🔧 샘플링: {len(dataset)} frames × H={sc.H}, K={sc.K}, variant={sc.variant}")
    sets = engine.sample_dataset(dataset, sc.H, sc.K, sc.seed, sc.variant, progress=config.progress)
    write_hypotheses(args.out, sets, sampler={**sc.to_dict(), "T": engine.schedule.T})
    print(f"✅ 가설 저장: {args.out}")


def cmd_aggregate(args):
    """가설 집계 + 신뢰도 CSV"""
    config = _load(args)
    strategy = config.eval.strategy
    if strategy in ("B", "Bjoint") and not args.gt:
        raise ConfigError(f"strategy {strategy} requires --gt")
    for path in (args.hypotheses, args.gt):
        if path and not os.path.exists(path):
            raise ConfigError(f"file not found: {path}")
    sets = read_hypotheses(args.hypotheses)
    gt_by_id = {s.sample_id: s for s in read_poses(args.gt)} if args.gt else None
    preds = aggregate_hypotheses(sets, strategy, gt_by_id, seed=config.seed)
    write_predictions(args.out, preds, strategy=strategy)
    conf_path = os.path.splitext(args.out)[0] + "_confidence.csv"
    write_confidence_csv(preds, conf_path)
    print(f"✅ 집계 저장 ({strategy}): {args.out}")
    print(f"  📊 신뢰도 CSV: {conf_path}")


def cmd_eval(args):
    """평가 리포트"""
    for path in (args.pred, args.gt, args.subset):
        if path and not os.path.exists(path):
            raise ConfigError(f"file not found: {path}")
    report = evaluate(args.pred, args.gt, group_by_action=args.per_action, subset=read_subset(args.subset))
    csv_path = os.path.splitext(args.out)[0] + ".csv" if args.csv else None
    write_report(report, args.out, csv_path)
    print(f"📊 {report.summary_line()}")
    if args.per_action:
        for tag, row in report.per_action.items():
            print(f"  {tag:<10s} MPJPE {row['mpjpe_mm']:7.2f}  P-MPJPE {row['p_mpjpe_mm']:7.2f}  frames {row['frames']}")
    if report.subset:
        print(f"  subset ({report.subset['ids']} frames): MPJPE {report.subset['mpjpe_mm']:.2f}")
    print(f"✅ 리포트 저장: {args.out}")


def cmd_study(args):
    """분석 스터디"""
    config = _load(args)
    core = get_core(config)
    checkpoints = None
    if args.ablation_ckpt:
        checkpoints = dict(item.split("=", 1) for item in args.ablation_ckpt)
    print(f"🔧 스터디 실행: {args.kind}")
    rows, csv_path = run_study(core, args.kind, checkpoints)
    for row in rows:
        print("  📊 " + ", ".join(f"{k}={v:.2f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    print(f"✅ 스터디 저장: {csv_path} (+ .json)")


def cmd_run(args):
    """전체 파이프라인"""
    config = _load(args)
    print(f"🔧 파이프라인 실행: out={config.out_dir}, seed={config.seed}, preset={config.preset}")
    core = get_core(config)
    report = core.run()
    print(f"📊 {report.summary_line()}")
    print(f"✅ 완료: {core.layout.report_json}, manifest={core.storage.path}")


# =============================================================================
# Main
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftkit",
        description="확산 기반 단일 프레임 2D → 3D 포즈 리프팅 CLI"
    )

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # 공통 --config, --preset, --seed 옵션을 위한 부모 parser
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="JSON 설정 파일 경로")
    parent.add_argument("--preset", choices=list(SCALE_PRESETS), default=None,
                        help="스케일 프리셋 (desk: CPU 데스크 스케일, 기본값 / full: 전체 스케일)")
    parent.add_argument("--seed", type=int, default=None, help="전역 시드 (기본: 설정값 또는 LIFTKIT_SEED)")
    parent.add_argument("--no-progress", action="store_true", help="진행 표시줄 끄기")

    # 출력 디렉토리 옵션 (산출물 레이아웃 루트)
    out_dir = argparse.ArgumentParser(add_help=False)
    out_dir.add_argument("--out", default=None, help="산출물 디렉토리 (기본: 설정값 또는 LIFTKIT_OUT_DIR)")
    out_dir.set_defaults(out_is_dir=True)

    # gen-data
    sub_gen = subparsers.add_parser("gen-data", parents=[parent, out_dir], help="합성 데이터셋 생성")
    sub_gen.set_defaults(func=cmd_gen_data)

    # train
    sub_train = subparsers.add_parser("train", parents=[parent, out_dir], help="모델 학습")
    sub_train.add_argument("--data", default=None, help="학습 데이터셋 파일 (기본: <out>/data/train.jsonl)")
    sub_train.add_argument("--resume", default=None, help="이어서 학습할 체크포인트")
    sub_train.set_defaults(func=cmd_train)

    # sample
    sub_sample = subparsers.add_parser("sample", parents=[parent], help="가설 샘플링")
    sub_sample.add_argument("--ckpt", required=True, help="체크포인트 파일")
    sub_sample.add_argument("--data", required=True, help="조건 데이터셋 파일")
    sub_sample.add_argument("--hypotheses", dest="hypotheses_count", type=int, default=None, help="가설 수 H")
    sub_sample.add_argument("--steps", type=int, default=None, help="역과정 스텝 수 K")
    sub_sample.add_argument("--variant", choices=list(SAMPLER_VARIANTS), default=None, help="역과정 갱신식")
    sub_sample.add_argument("--out", required=True, help="가설 파일 경로")
    sub_sample.set_defaults(func=cmd_sample)

    # aggregate
    sub_agg = subparsers.add_parser("aggregate", parents=[parent], help="가설 집계")
    sub_agg.add_argument("--hypotheses", required=True, help="가설 파일")
    sub_agg.add_argument("--strategy", choices=list(AGGREGATION_STRATEGIES), default=None, help="집계 전략")
    sub_agg.add_argument("--gt", default=None, help="정답 데이터셋 (B/Bjoint 필수)")
    sub_agg.add_argument("--out", required=True, help="집계 결과 파일")
    sub_agg.set_defaults(func=cmd_aggregate)

    # eval
    sub_eval = subparsers.add_parser("eval", parents=[parent], help="평가 리포트")
    sub_eval.add_argument("--pred", required=True, help="집계 결과 파일")
    sub_eval.add_argument("--gt", required=True, help="정답 데이터셋 파일")
    sub_eval.add_argument("--per-action", action="store_true", help="액션별 수치 포함")
    sub_eval.add_argument("--subset", default=None, help="추가 보고할 frame id 목록 파일")
    sub_eval.add_argument("--csv", action="store_true", help="표 형식 CSV 함께 저장")
    sub_eval.add_argument("--out", required=True, help="report.json 경로")
    sub_eval.set_defaults(func=cmd_eval)

    # study
    sub_study = subparsers.add_parser("study", parents=[parent, out_dir], help="분석 스터디")
    sub_study.add_argument("--kind", choices=list(STUDY_KINDS), required=True, help="스터디 종류")
    sub_study.add_argument("--ablation-ckpt", nargs="*", default=None, metavar="COND=PATH",
                           help="조건별 체크포인트 (pose=..., context=..., both=...). 생략 시 재학습")
    sub_study.set_defaults(func=cmd_study)

    # run
    sub_run = subparsers.add_parser("run", parents=[parent, out_dir], help="전체 파이프라인")
    sub_run.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return EXIT_RUNTIME

    try:
        args.func(args)
    except ConfigError as e:
        print(f"❌ 설정 오류: {e}")
        return EXIT_CONFIG
    except StageError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG if isinstance(e.cause, ConfigError) else EXIT_RUNTIME
    except (LiftkitError, OSError, ValueError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"❌ 실행 오류: {type(e).__name__}: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
