"""
diffusion/denoiser.py - 조건부 노이즈 예측 네트워크 ε̂ = D(y_t, F, f_t)

입력 텐서 X: (B, c, J, d), c = L + 2
  채널 0..L-1 : 컨텍스트 특징
  채널 L      : 2D 포즈 특징
  채널 L+1    : pose_in_proj(y_t) (관절별 3 → d)
  모든 (채널, 관절) 임베딩에 f_t를 더한다.

단계:
  1. Pose-to-Context : 채널 축 어텐션 (토큰 = 채널)
       flatten   → 토큰 (B, c, J·d)
       per_joint → 관절별 배치 (B·J, c, d)
  2. Joint-to-Joint  : 관절 축 어텐션, 토큰 (B, J, c·d)
  3. channel_fuse    : c·d → d
  4. head            : d → 3

파라미터는 선언 순서가 고정된 dict (이름 → ndarray). 역전파는 해석적.
"""
from __future__ import annotations

import logging
import math

import numpy as np

try:
    from ..errors import ConfigError
    from ..pose._types import ConditioningFeatures
    from ._helpers import check_finite
    from ._types import BackwardResult, DenoiserConfig
    from .layers import block_backward, block_forward, block_param_shapes, linear_backward
except ImportError:
    from errors import ConfigError
    from pose._types import ConditioningFeatures
    from diffusion._helpers import check_finite
    from diffusion._types import BackwardResult, DenoiserConfig
    from diffusion.layers import block_backward, block_forward, block_param_shapes, linear_backward

logger = logging.getLogger(__name__)


def embed_timestep(t, d: int) -> np.ndarray:
    """사인파 타임스텝 임베딩

    f_t[2i] = sin(t / 10000^(2i/d)), f_t[2i+1] = cos(t / 10000^(2i/d)).
    t가 (B,) 배열이면 (B, d), 스칼라면 (d,).
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError(f"timestep must be >= 0, got {t}")
    i = np.arange(d) // 2
    freq = 10000.0 ** (-2.0 * i / d)
    angle = t_arr[..., None] * freq
    return np.where(np.arange(d) % 2 == 0, np.sin(angle), np.cos(angle))


class DenoiserModel:
    """노이즈 예측 모델 (파라미터 컨테이너)

    J와 L은 생성 시점에 고정된다 (flatten 모드의 채널 토큰 크기가 J·d).
    """

    def __init__(self, config: DenoiserConfig, J: int, L: int, params: dict[str, np.ndarray] | None = None):
        config.validate()
        if J < 1 or L < 0:
            raise ConfigError(f"invalid model geometry J={J}, L={L}")
        self.config = config
        self.J = int(J)
        self.L = int(L)
        self.c = self.L + 2
        self.d = config.d
        self.heads = config.heads
        self.dtype = np.dtype(config.dtype)

        self.p2c_dim = self.J * self.d if config.channel_tokens == "flatten" else self.d
        self.j2j_dim = self.c * self.d
        for stage, dim in (("p2c", self.p2c_dim), ("j2j", self.j2j_dim)):
            if dim % self.heads:
                raise ConfigError(f"{stage} token size {dim} is not divisible by heads={self.heads}")

        self.param_specs = self._declare()
        if params is None:
            self.params = self._init_params()
        else:
            self.params = self._adopt(params)
        logger.debug(f"DenoiserModel: J={self.J}, c={self.c}, d={self.d}, params={self.n_params}")

    # =========================================================================
    # 파라미터 선언 / 초기화
    # =========================================================================

    def _declare(self) -> list[tuple[str, tuple[int, ...], str, int]]:
        d, cfg = self.d, self.config
        specs = [("pose_in.W", (3, d), "W", 3), ("pose_in.b", (d,), "b", 3)]
        for stage, n_blocks, dim in (("p2c", cfg.n_p2c, self.p2c_dim), ("j2j", cfg.n_j2j, self.j2j_dim)):
            for i in range(n_blocks):
                for suffix, shape, kind, fan_in in block_param_shapes(dim, cfg.ffn_mult * dim):
                    specs.append((f"{stage}.{i}.{suffix}", shape, kind, fan_in))
        specs += [
            ("fuse.W", (self.j2j_dim, d), "W", self.j2j_dim),
            ("fuse.b", (d,), "b", self.j2j_dim),
            ("head.W", (d, 3), "W", d),
            ("head.b", (3,), "b", d),
        ]
        return specs

    def _init_params(self) -> dict[str, np.ndarray]:
        """선형층 U(−1/√fan_in, 1/√fan_in), LayerNorm gain 1 / bias 0"""
        rng = np.random.default_rng(self.config.init_seed)
        params: dict[str, np.ndarray] = {}
        for name, shape, kind, fan_in in self.param_specs:
            if kind == "g":
                arr = np.ones(shape)
            elif kind == "beta":
                arr = np.zeros(shape)
            else:
                bound = 1.0 / math.sqrt(fan_in)
                arr = rng.uniform(-bound, bound, size=shape)
            params[name] = arr.astype(self.dtype)
        return params

    def _adopt(self, params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        expected = [name for name, *_ in self.param_specs]
        if list(params) != expected:
            missing = sorted(set(expected) - set(params))
            extra = sorted(set(params) - set(expected))
            raise ConfigError(f"parameter set mismatch (missing={missing[:5]}, unexpected={extra[:5]})")
        adopted = {}
        for name, shape, _, _ in self.param_specs:
            arr = np.asarray(params[name])
            if arr.shape != shape:
                raise ConfigError(f"parameter '{name}' has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"parameter '{name}' contains non-finite values")
            adopted[name] = arr.astype(self.dtype, copy=True)
        return adopted

    @property
    def n_params(self) -> int:
        return sum(int(p.size) for p in self.params.values())

    def copy(self) -> "DenoiserModel":
        return DenoiserModel(self.config, self.J, self.L, params=self.params)

    def conditioning_mask(self) -> np.ndarray:
        """F 채널별 0/1 마스크 (L+1,)"""
        mask = np.ones(self.L + 1, dtype=self.dtype)
        if self.config.conditioning == "pose":
            mask[: self.L] = 0
        elif self.config.conditioning == "context":
            mask[self.L] = 0
        return mask

    # 편의 메서드
    def forward(self, y_t, F, f_t):
        return forward(self, y_t, F, f_t)

    def predict_noise(self, y_t, F, t) -> np.ndarray:
        return predict_noise(self, y_t, F, t)


# =============================================================================
# forward
# =============================================================================

def _as_batch(model: DenoiserModel, y_t, F, f_t) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    if isinstance(F, ConditioningFeatures):
        F = F.tensor
    y = np.asarray(y_t, dtype=model.dtype)
    F = np.asarray(F, dtype=model.dtype)
    f = np.asarray(f_t, dtype=model.dtype)
    single = y.ndim == 2
    if single:
        y, F, f = y[None], F[None], f[None]
    B = y.shape[0]
    if y.shape != (B, model.J, 3):
        raise ValueError(f"y_t shape {y.shape} does not match (B, {model.J}, 3)")
    if F.ndim == 3:
        F = np.broadcast_to(F, (B,) + F.shape)
    if F.shape != (B, model.L + 1, model.J, model.d):
        raise ValueError(f"features shape {F.shape} does not match (B, {model.L + 1}, {model.J}, {model.d})")
    if f.ndim == 1:
        f = np.broadcast_to(f, (B, f.shape[0]))
    if f.shape != (B, model.d):
        raise ValueError(f"timestep embedding shape {f.shape} does not match (B, {model.d})")
    return y, F, f, single


def assemble_input(model: DenoiserModel, y_t, F, f_t) -> np.ndarray:
    """X = [F (마스크 적용), pose_in_proj(y_t)] + f_t 브로드캐스트"""
    y, Fb, f, single = _as_batch(model, y_t, F, f_t)
    X = _assemble(model, y, Fb, f)
    return X[0] if single else X


def _assemble(model: DenoiserModel, y: np.ndarray, F: np.ndarray, f: np.ndarray) -> np.ndarray:
    P = model.params
    masked = F * model.conditioning_mask()[None, :, None, None]
    pose_emb = y @ P["pose_in.W"] + P["pose_in.b"]
    X = np.concatenate([masked, pose_emb[:, None]], axis=1)
    return X + f[:, None, None, :]


def _p2c_tokens(model: DenoiserModel, X: np.ndarray) -> np.ndarray:
    B = X.shape[0]
    if model.config.channel_tokens == "flatten":
        return X.reshape(B, model.c, model.J * model.d)
    return X.transpose(0, 2, 1, 3).reshape(B * model.J, model.c, model.d)


def _p2c_untokens(model: DenoiserModel, tok: np.ndarray, B: int) -> np.ndarray:
    if model.config.channel_tokens == "flatten":
        return tok.reshape(B, model.c, model.J, model.d)
    return tok.reshape(B, model.J, model.c, model.d).transpose(0, 2, 1, 3)


def forward(model: DenoiserModel, y_t, F, f_t) -> tuple[np.ndarray, dict]:
    """ε̂ 예측. 반환: (ε̂ (B, J, 3) 또는 (J, 3), 역전파용 cache)

    비유한 활성값은 NumericalError(stage)로 중단.
    """
    P = model.params
    y, Fb, f, single = _as_batch(model, y_t, F, f_t)
    B = y.shape[0]
    cache: dict = {"single": single, "B": B, "y": y}

    X = check_finite(_assemble(model, y, Fb, f), "input")

    tok = _p2c_tokens(model, X)
    p2c_caches = []
    for i in range(model.config.n_p2c):
        tok, c = block_forward(tok, P, f"p2c.{i}.", model.heads)
        p2c_caches.append(c)
    X = check_finite(_p2c_untokens(model, tok, B), "p2c")

    tok = X.transpose(0, 2, 1, 3).reshape(B, model.J, model.j2j_dim)
    j2j_caches = []
    for i in range(model.config.n_j2j):
        tok, c = block_forward(tok, P, f"j2j.{i}.", model.heads)
        j2j_caches.append(c)
    check_finite(tok, "j2j")

    z = check_finite(tok @ P["fuse.W"] + P["fuse.b"], "fuse")
    eps_hat = check_finite(z @ P["head.W"] + P["head.b"], "head")

    cache.update(p2c=p2c_caches, j2j=j2j_caches, j2j_out=tok, fuse_out=z)
    return (eps_hat[0] if single else eps_hat), cache


def predict_noise(model: DenoiserModel, y_t, F, t) -> np.ndarray:
    return forward(model, y_t, F, embed_timestep(t, model.d))[0]


# =============================================================================
# backward
# =============================================================================

_CACHE_KEYS = ("single", "B", "y", "p2c", "j2j", "j2j_out", "fuse_out")


def backward(model: DenoiserModel, cache: dict | None, d_eps: np.ndarray, input_grads: bool = False) -> BackwardResult:
    """∂L/∂ε̂ → 모든 파라미터 그래디언트 (선택: y_t, F 그래디언트)"""
    if not cache or any(k not in cache for k in _CACHE_KEYS):
        raise ValueError("backward requires the intermediates of a forward pass")
    P = model.params
    B = cache["B"]
    d_eps = np.asarray(d_eps, dtype=model.dtype)
    if cache["single"]:
        d_eps = d_eps[None]
    if d_eps.shape != (B, model.J, 3):
        raise ValueError(f"upstream gradient shape {d_eps.shape} does not match output (B={B}, {model.J}, 3)")

    grads: dict[str, np.ndarray] = {}
    dz, grads["head.W"], grads["head.b"] = linear_backward(d_eps, cache["fuse_out"], P["head.W"])
    dtok, grads["fuse.W"], grads["fuse.b"] = linear_backward(dz, cache["j2j_out"], P["fuse.W"])

    for i in reversed(range(model.config.n_j2j)):
        dtok = block_backward(dtok, cache["j2j"][i], P, f"j2j.{i}.", grads)
    dX = dtok.reshape(B, model.J, model.c, model.d).transpose(0, 2, 1, 3)

    dtok = _p2c_tokens(model, dX)
    for i in reversed(range(model.config.n_p2c)):
        dtok = block_backward(dtok, cache["p2c"][i], P, f"p2c.{i}.", grads)
    dX = _p2c_untokens(model, dtok, B)

    d_pose_emb = dX[:, model.L + 1]
    dy, grads["pose_in.W"], grads["pose_in.b"] = linear_backward(d_pose_emb, cache["y"], P["pose_in.W"])

    ordered = {name: grads[name].astype(model.dtype, copy=False) for name, *_ in model.param_specs}
    result = BackwardResult(params=ordered)
    if input_grads:
        dF = dX[:, : model.L + 1] * model.conditioning_mask()[None, :, None, None]
        result.y_t = dy[0] if cache["single"] else dy
        result.features = dF[0] if cache["single"] else dF
    return result


__all__ = [
    "DenoiserModel",
    "embed_timestep",
    "assemble_input",
    "forward",
    "backward",
    "predict_noise",
]
