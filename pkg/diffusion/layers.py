"""
diffusion/layers.py - numpy 신경망 레이어 (forward/backward)

모든 함수는 배치 축을 앞에 둔 배열을 받는다.
forward는 (출력, cache), backward는 (입력 그래디언트, 파라미터 그래디언트)를 돌려준다.

블록 구조 (pre-norm residual):
  h   = x + MHA(LN1(x))
  out = h + W2 · GELU(W1 · LN2(h) + b1) + b2
"""
from __future__ import annotations

import math

import numpy as np

LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715

# (접미사, 종류). 종류: "W"/"b" 선형, "g"/"beta" LayerNorm
BLOCK_PARAM_SUFFIXES: tuple[tuple[str, str], ...] = (
    ("ln1.g", "g"), ("ln1.b", "beta"),
    ("attn.Wq", "W"), ("attn.bq", "b"),
    ("attn.Wk", "W"), ("attn.bk", "b"),
    ("attn.Wv", "W"), ("attn.bv", "b"),
    ("attn.Wo", "W"), ("attn.bo", "b"),
    ("ln2.g", "g"), ("ln2.b", "beta"),
    ("ffn.W1", "W"), ("ffn.b1", "b"),
    ("ffn.W2", "W"), ("ffn.b2", "b"),
)


def block_param_shapes(D: int, hidden: int) -> list[tuple[str, tuple[int, ...], str, int]]:
    """블록 파라미터 (접미사, shape, 종류, fan_in) 선언 순서 목록"""
    shapes = {
        "ln1.g": (D,), "ln1.b": (D,),
        "attn.Wq": (D, D), "attn.bq": (D,),
        "attn.Wk": (D, D), "attn.bk": (D,),
        "attn.Wv": (D, D), "attn.bv": (D,),
        "attn.Wo": (D, D), "attn.bo": (D,),
        "ln2.g": (D,), "ln2.b": (D,),
        "ffn.W1": (D, hidden), "ffn.b1": (hidden,),
        "ffn.W2": (hidden, D), "ffn.b2": (D,),
    }
    fan_in = {"ffn.W2": hidden, "ffn.b2": hidden}
    return [(s, shapes[s], kind, fan_in.get(s, D)) for s, kind in BLOCK_PARAM_SUFFIXES]


# =============================================================================
# 기본 연산
# =============================================================================

def _flat(a: np.ndarray) -> np.ndarray:
    return a.reshape(-1, a.shape[-1])


def linear_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ W + b


def linear_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dW = _flat(x).T @ _flat(dy)
    db = _flat(dy).sum(axis=0)
    return dy @ W.T, dW, db


def layernorm_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, tuple]:
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv)


def layernorm_backward(dy: np.ndarray, cache: tuple, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv = cache
    dg = _flat(dy * xhat).sum(axis=0)
    db = _flat(dy).sum(axis=0)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def gelu_forward(x: np.ndarray) -> tuple[np.ndarray, tuple]:
    """GELU (tanh 근사)"""
    th = np.tanh(_GELU_C * (x + _GELU_K * x ** 3))
    return 0.5 * x * (1.0 + th), (x, th)


def gelu_backward(dy: np.ndarray, cache: tuple) -> np.ndarray:
    x, th = cache
    du = _GELU_C * (1.0 + 3.0 * _GELU_K * x * x)
    return dy * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du)


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# =============================================================================
# 멀티헤드 셀프 어텐션: (N, S, D), 토큰 축 S
# =============================================================================

def attention_forward(u: np.ndarray, P: dict, prefix: str, heads: int) -> tuple[np.ndarray, tuple]:
    N, S, D = u.shape
    dh = D // heads

    def split(a: np.ndarray) -> np.ndarray:
        return a.reshape(N, S, heads, dh).transpose(0, 2, 1, 3)

    qh = split(linear_forward(u, P[prefix + "Wq"], P[prefix + "bq"]))
    kh = split(linear_forward(u, P[prefix + "Wk"], P[prefix + "bk"]))
    vh = split(linear_forward(u, P[prefix + "Wv"], P[prefix + "bv"]))
    scale = 1.0 / math.sqrt(dh)
    A = softmax((qh @ kh.transpose(0, 1, 3, 2)) * scale)
    merged = (A @ vh).transpose(0, 2, 1, 3).reshape(N, S, D)
    out = linear_forward(merged, P[prefix + "Wo"], P[prefix + "bo"])
    return out, (u, qh, kh, vh, A, merged, scale, heads)


def attention_backward(dout: np.ndarray, cache: tuple, P: dict, prefix: str, grads: dict) -> np.ndarray:
    u, qh, kh, vh, A, merged, scale, heads = cache
    N, S, D = u.shape
    dh = D // heads

    def merge(a: np.ndarray) -> np.ndarray:
        return a.transpose(0, 2, 1, 3).reshape(N, S, D)

    dmerged, grads[prefix + "Wo"], grads[prefix + "bo"] = linear_backward(dout, merged, P[prefix + "Wo"])
    do = dmerged.reshape(N, S, heads, dh).transpose(0, 2, 1, 3)
    dA = do @ vh.transpose(0, 1, 3, 2)
    dvh = A.transpose(0, 1, 3, 2) @ do
    dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True)) * scale
    dqh = dS @ kh
    dkh = dS.transpose(0, 1, 3, 2) @ qh

    du = np.zeros_like(u)
    for name, dpart in (("q", dqh), ("k", dkh), ("v", dvh)):
        dx, grads[prefix + "W" + name], grads[prefix + "b" + name] = linear_backward(
            merge(dpart), u, P[prefix + "W" + name]
        )
        du += dx
    return du


# =============================================================================
# Pre-norm 트랜스포머 블록
# =============================================================================

def block_forward(x: np.ndarray, P: dict, prefix: str, heads: int) -> tuple[np.ndarray, dict]:
    a, c_ln1 = layernorm_forward(x, P[prefix + "ln1.g"], P[prefix + "ln1.b"])
    att, c_att = attention_forward(a, P, prefix + "attn.", heads)
    h = x + att
    m, c_ln2 = layernorm_forward(h, P[prefix + "ln2.g"], P[prefix + "ln2.b"])
    z1 = linear_forward(m, P[prefix + "ffn.W1"], P[prefix + "ffn.b1"])
    g, c_gelu = gelu_forward(z1)
    out = h + linear_forward(g, P[prefix + "ffn.W2"], P[prefix + "ffn.b2"])
    return out, {"ln1": c_ln1, "attn": c_att, "ln2": c_ln2, "m": m, "gelu": c_gelu, "g": g}


def block_backward(dout: np.ndarray, cache: dict, P: dict, prefix: str, grads: dict) -> np.ndarray:
    dg, grads[prefix + "ffn.W2"], grads[prefix + "ffn.b2"] = linear_backward(dout, cache["g"], P[prefix + "ffn.W2"])
    dz1 = gelu_backward(dg, cache["gelu"])
    dm, grads[prefix + "ffn.W1"], grads[prefix + "ffn.b1"] = linear_backward(dz1, cache["m"], P[prefix + "ffn.W1"])
    dh_ln, grads[prefix + "ln2.g"], grads[prefix + "ln2.b"] = layernorm_backward(dm, cache["ln2"], P[prefix + "ln2.g"])
    dh = dout + dh_ln
    da = attention_backward(dh, cache["attn"], P, prefix + "attn.", grads)
    dx_ln, grads[prefix + "ln1.g"], grads[prefix + "ln1.b"] = layernorm_backward(da, cache["ln1"], P[prefix + "ln1.g"])
    return dh + dx_ln
