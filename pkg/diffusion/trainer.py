"""
diffusion/trainer.py - 결정적 학습 루프 Mixin

배치마다 RNG 소비 순서 고정: 셔플 → t ~ U[1, T] → eps ~ N(0, I) → 반전 여부.
같은 시드 + 같은 체크포인트면 이어서 학습해도 결과가 비트 단위로 같다.
"""
from __future__ import annotations

import logging

import numpy as np
from tqdm import tqdm

try:
    from ..config import COORD_SCALE
    from ..errors import NumericalError, TrainingDivergedError
    from ..pose._types import PoseSample
    from ..pose.augment import flip_coords, flip_features
    from ._helpers import clip_by_global_norm, global_norm
    from ._types import EpochMetrics
    from .denoiser import backward, embed_timestep, forward
    from .schedule import DiffusionSchedule, forward_sample
except ImportError:
    from config import COORD_SCALE
    from errors import NumericalError, TrainingDivergedError
    from pose._types import PoseSample
    from pose.augment import flip_coords, flip_features
    from diffusion._helpers import clip_by_global_norm, global_norm
    from diffusion._types import EpochMetrics
    from diffusion.denoiser import backward, embed_timestep, forward
    from diffusion.schedule import DiffusionSchedule, forward_sample

logger = logging.getLogger(__name__)

# 이 에폭 수 동안 최저 loss 갱신이 없으면 경고
PLATEAU_EPOCHS = 10


class AdamOptimizer:
    """Adam (β1=0.9, β2=0.999, ε=1e-8 기본). 파라미터 dict를 제자리 갱신"""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 m: dict | None = None, v: dict | None = None, step_count: int = 0):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = dict(m or {})
        self.v: dict[str, np.ndarray] = dict(v or {})
        self.step_count = int(step_count)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            update = lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            params[name] = (p - update).astype(p.dtype, copy=False)

    def state_dict(self) -> dict:
        return {"beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "step": self.step_count}


def stack_dataset(dataset: list[PoseSample]) -> tuple[np.ndarray, np.ndarray]:
    """(y0 확산 좌표 (N, J, 3), 특징 (N, L+1, J, d))"""
    if not dataset:
        raise ValueError("dataset is empty")
    y0 = np.stack([s.pose3d for s in dataset]) / COORD_SCALE
    features = np.stack([s.features.tensor for s in dataset])
    return y0, features


def loss(model, schedule: DiffusionSchedule, sample: PoseSample, t: int, eps: np.ndarray) -> float:
    """단일 샘플 노이즈 MSE: mean((eps − ε̂)²) over J×3

    model은 predict_noise(y_t, F, t)만 있으면 된다.
    """
    y0 = sample.pose3d / COORD_SCALE
    y_t = forward_sample(schedule, y0, t, eps)
    eps_hat = model.predict_noise(y_t, sample.features, t)
    value = float(np.mean((np.asarray(eps) - eps_hat) ** 2))
    if not np.isfinite(value):
        raise NumericalError("loss is not finite", "loss")
    return value


class TrainerMixin:
    """학습 관련 메서드 (LiftEngine에 조합)

    필요 속성: model, schedule, skeleton, train_config, optimizer, rng, epoch,
    last_checkpoint
    """

    def loss(self, sample: PoseSample, t: int, eps: np.ndarray) -> float:
        return loss(self.model, self.schedule, sample, t, eps)

    def _train_batch(self, y0: np.ndarray, features: np.ndarray, lr: float) -> tuple[float, float]:
        cfg = self.train_config
        B, J = y0.shape[:2]
        rng = self.rng
        t = rng.integers(1, self.schedule.T + 1, size=B)
        eps = rng.standard_normal((B, J, 3))
        flip = rng.random(B) < cfg.flip_prob
        if flip.any():
            mirror = self.skeleton.mirror_map
            y0 = y0.copy()
            features = features.copy()
            y0[flip] = flip_coords(y0[flip], mirror)
            features[flip] = flip_features(features[flip], mirror)

        y_t = forward_sample(self.schedule, y0, t, eps)
        eps_hat, cache = forward(self.model, y_t, features, embed_timestep(t, self.model.d))
        diff = eps_hat - eps.astype(self.model.dtype)
        value = float(np.mean(diff.astype(np.float64) ** 2))
        if not np.isfinite(value):
            raise NumericalError("loss is not finite", "loss")

        grads = backward(self.model, cache, 2.0 * diff / diff.size).params
        if cfg.clip_grad_norm is not None:
            grads, norm = clip_by_global_norm(grads, cfg.clip_grad_norm)
        else:
            norm = global_norm(grads)
        self.optimizer.step(self.model.params, grads, lr)
        return value, norm

    def train_epoch(self, dataset, progress: bool = False) -> EpochMetrics:
        """한 에폭 학습. dataset: PoseSample 리스트 또는 stack_dataset 결과"""
        y0_all, feat_all = stack_dataset(dataset) if isinstance(dataset, list) else dataset
        N = len(y0_all)
        if N == 0:
            raise ValueError("dataset is empty")
        cfg = self.train_config
        lr = cfg.lr_at(self.epoch)
        order = self.rng.permutation(N)

        losses: list[float] = []
        max_norm = 0.0
        starts = range(0, N, cfg.batch_size)
        for start in tqdm(starts, desc=f"epoch {self.epoch + 1}", disable=not progress, leave=False):
            idx = order[start:start + cfg.batch_size]
            try:
                value, norm = self._train_batch(y0_all[idx], feat_all[idx], lr)
            except NumericalError as e:
                raise TrainingDivergedError(
                    f"training diverged at epoch {self.epoch + 1}, batch {start // cfg.batch_size}: {e}",
                    last_checkpoint=self.last_checkpoint,
                ) from e
            # 배치 크기 가중 평균
            losses.extend([value] * len(idx))
            max_norm = max(max_norm, norm)

        self.epoch += 1
        metrics = EpochMetrics(
            epoch=self.epoch,
            mean_loss=float(np.mean(losses)),
            lr=lr,
            n_batches=len(starts),
            max_grad_norm=max_norm,
        )
        logger.info(f"epoch {metrics.epoch}: loss={metrics.mean_loss:.6f}, lr={lr:.3e}, |g|max={max_norm:.3f}")
        return metrics

    def train(self, dataset, epochs: int | None = None, ckpt_dir=None, progress: bool = False) -> list[EpochMetrics]:
        """현재 epoch부터 epochs(총 에폭 수)까지 학습

        ckpt_dir가 주어지면 매 에폭 last.ckpt를 갱신한다.
        """
        target = self.train_config.epochs if epochs is None else epochs
        arrays = stack_dataset(dataset) if isinstance(dataset, list) else dataset
        history: list[EpochMetrics] = []
        best = float("inf")
        since_best = 0
        if self.epoch >= target:
            logger.info(f"이미 epoch {self.epoch} >= {target}, 학습 생략")
        for _ in tqdm(range(self.epoch, target), desc="train", disable=not progress):
            metrics = self.train_epoch(arrays, progress=progress)
            history.append(metrics)
            if metrics.mean_loss < best:
                best, since_best = metrics.mean_loss, 0
            else:
                since_best += 1
                if since_best == PLATEAU_EPOCHS:
                    logger.warning(f"loss plateau: no improvement over {PLATEAU_EPOCHS} epochs (best={best:.6f})")
            if ckpt_dir is not None:
                self.last_checkpoint = str(self.save(f"{ckpt_dir}/last.ckpt"))
        return history


__all__ = ["AdamOptimizer", "TrainerMixin", "loss", "stack_dataset"]
