"""Layer primitives with hand-derived backward passes.

Every layer is a pair of pure functions: forward(...) -> (out, cache) and
backward(cache, dout) -> gradients.  Caches hold exactly the arrays the
backward pass needs.  All math is plain numpy; dtype follows the inputs
(float64 in gradient tests, float32 in training).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from .embed import PAD_INDEX
from .rng import STREAM_DROPOUT, bulk_generator

# layer ids for dropout mask derivation (mask must be a deterministic
# function of seed, step, and layer id)
LAYER_EMBED_DROPOUT = 1


class NumericsError(FloatingPointError):
    """Raised by the NaN/Inf tripwire, naming the offending layer."""


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values after layer '{name}'")
    return arr


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is overflow-safe for large |x|
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


class _ParamBase:
    """Mixin giving parameter dataclasses a stable name -> array view."""

    def named_arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    def astype(self, dtype):
        return type(self)(**{n: a.astype(dtype) for n, a in self.named_arrays()})


@dataclass
class LSTMParams(_ParamBase):
    W_f: np.ndarray
    U_f: np.ndarray
    b_f: np.ndarray
    W_i: np.ndarray
    U_i: np.ndarray
    b_i: np.ndarray
    W_o: np.ndarray
    U_o: np.ndarray
    b_o: np.ndarray
    W_u: np.ndarray
    U_u: np.ndarray
    b_u: np.ndarray

    def __post_init__(self):
        D, H = self.W_f.shape
        for name, arr in self.named_arrays():
            want = (D, H) if name.startswith("W_") else (H, H) if name.startswith("U_") else (H,)
            if arr.shape != want:
                raise ValueError(f"LSTM param {name}: expected shape {want}, got {arr.shape}")


@dataclass
class AttentionParams(_ParamBase):
    w: np.ndarray  # (d, 1)
    b: np.ndarray  # (T, 1)

    def __post_init__(self):
        if self.w.ndim != 2 or self.w.shape[1] != 1:
            raise ValueError(f"attention w must be (d, 1), got {self.w.shape}")
        if self.b.ndim != 2 or self.b.shape[1] != 1:
            raise ValueError(f"attention b must be (T, 1), got {self.b.shape}")


@dataclass
class Conv1DParams(_ParamBase):
    kernels: np.ndarray  # (k, d_in, F)
    bias: np.ndarray  # (F,)

    def __post_init__(self):
        if self.kernels.ndim != 3:
            raise ValueError(f"conv kernels must be (k, d_in, F), got {self.kernels.shape}")
        if self.bias.shape != (self.kernels.shape[2],):
            raise ValueError("conv bias length must equal filter count")


@dataclass
class DenseParams(_ParamBase):
    W: np.ndarray  # (M, C)
    b: np.ndarray  # (C,)

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ValueError(f"dense shapes inconsistent: W {self.W.shape}, b {self.b.shape}")


# ---------------------------------------------------------------- embedding


def embedding_forward(E: np.ndarray, indices: np.ndarray):
    """Row gather: (B, T) int indices -> (B, T, D)."""
    idx = np.asarray(indices)
    if idx.min(initial=0) < 0 or idx.max(initial=0) >= E.shape[0]:
        raise IndexError(f"embedding index out of range [0, {E.shape[0]})")
    return E[idx], (idx, E.shape, E.dtype)


def embedding_backward(cache, dout: np.ndarray) -> np.ndarray:
    """Scatter-add per row; PAD row gradient forced to zero."""
    idx, shape, dtype = cache
    dE = np.zeros(shape, dtype=dtype)
    np.add.at(dE, idx.reshape(-1), dout.reshape(-1, shape[1]).astype(dtype))
    dE[PAD_INDEX] = 0.0
    return dE


# ------------------------------------------------------------------ dropout


def dropout_mask(shape, rate: float, seed: int, step: int, layer_id: int, dtype) -> np.ndarray:
    """Inverted-dropout mask, deterministic in (seed, step, layer_id)."""
    rng = bulk_generator(seed, STREAM_DROPOUT, step, layer_id)
    keep = rng.random(shape) >= rate
    return keep.astype(dtype) / dtype(1.0 - rate)


def dropout_forward(x: np.ndarray, rate: float, mode: str, seed: int, step: int,
                    layer_id: int = LAYER_EMBED_DROPOUT):
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" or rate == 0.0:
        return x, None
    mask = dropout_mask(x.shape, rate, seed, step, layer_id, x.dtype.type)
    return x * mask, mask


def dropout_backward(cache, dout: np.ndarray) -> np.ndarray:
    return dout if cache is None else dout * cache


# --------------------------------------------------------------------- lstm


def lstm_forward(p: LSTMParams, X: np.ndarray):
    """Gate recurrence over (B, T, D), zero initial state, full (B, T, H) out."""
    B, T, D = X.shape
    H = p.b_f.shape[0]
    if p.W_f.shape[0] != D:
        raise ValueError(f"LSTM input dim mismatch: params expect {p.W_f.shape[0]}, got {D}")
    h = np.zeros((B, H), dtype=X.dtype)
    c = np.zeros((B, H), dtype=X.dtype)
    out = np.empty((B, T, H), dtype=X.dtype)
    steps = []
    for t in range(T):
        x = X[:, t, :]
        f = sigmoid(x @ p.W_f + h @ p.U_f + p.b_f)
        i = sigmoid(x @ p.W_i + h @ p.U_i + p.b_i)
        o = sigmoid(x @ p.W_o + h @ p.U_o + p.b_o)
        u = np.tanh(x @ p.W_u + h @ p.U_u + p.b_u)
        c_new = f * c + i * u
        tc = np.tanh(c_new)
        steps.append((x, h, c, f, i, o, u, tc))
        h = o * tc
        c = c_new
        out[:, t, :] = h
    return out, (p, (B, T, D, H), steps)


def lstm_backward(cache, dH: np.ndarray):
    """Full BPTT. Returns (param grads dict, dX)."""
    p, (B, T, D, H), steps = cache
    g = {name: np.zeros_like(arr) for name, arr in p.named_arrays()}
    dX = np.empty((B, T, D), dtype=dH.dtype)
    dh_next = np.zeros((B, H), dtype=dH.dtype)
    dc_next = np.zeros((B, H), dtype=dH.dtype)
    for t in range(T - 1, -1, -1):
        x, h_prev, c_prev, f, i, o, u, tc = steps[t]
        dh = dH[:, t, :] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        df = dc * c_prev
        di = dc * u
        du = dc * i
        dc_next = dc * f
        da_f = df * f * (1.0 - f)
        da_i = di * i * (1.0 - i)
        da_o = do * o * (1.0 - o)
        da_u = du * (1.0 - u * u)
        g["W_f"] += x.T @ da_f
        g["W_i"] += x.T @ da_i
        g["W_o"] += x.T @ da_o
        g["W_u"] += x.T @ da_u
        g["U_f"] += h_prev.T @ da_f
        g["U_i"] += h_prev.T @ da_i
        g["U_o"] += h_prev.T @ da_o
        g["U_u"] += h_prev.T @ da_u
        g["b_f"] += da_f.sum(axis=0)
        g["b_i"] += da_i.sum(axis=0)
        g["b_o"] += da_o.sum(axis=0)
        g["b_u"] += da_u.sum(axis=0)
        dX[:, t, :] = da_f @ p.W_f.T + da_i @ p.W_i.T + da_o @ p.W_o.T + da_u @ p.W_u.T
        dh_next = da_f @ p.U_f.T + da_i @ p.U_i.T + da_o @ p.U_o.T + da_u @ p.U_u.T
    return g, dX


# ---------------------------------------------------------------- attention


def attention_forward(p: AttentionParams, P: np.ndarray):
    """e = tanh(P w + b); alpha = softmax over time; out = P * alpha (3-D kept)."""
    B, T, d = P.shape
    if p.w.shape[0] != d:
        raise ValueError(f"attention feature dim mismatch: w has {p.w.shape[0]}, input {d}")
    if p.b.shape[0] != T:
        raise ValueError(f"attention length mismatch: b has {p.b.shape[0]}, input {T}")
    e = np.tanh(P @ p.w + p.b)  # (B, T, 1)
    m = e.max(axis=1, keepdims=True)
    ex = np.exp(e - m)
    alpha = ex / ex.sum(axis=1, keepdims=True)
    return P * alpha, (p, P, e, alpha)


def attention_backward(cache, dout: np.ndarray):
    """Chain through broadcast product, time softmax, and tanh."""
    p, P, e, alpha = cache
    dP = dout * alpha
    dalpha = (dout * P).sum(axis=2, keepdims=True)  # (B, T, 1)
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
    ds = de * (1.0 - e * e)  # gradient at P w + b
    dw = (P * ds).sum(axis=(0, 1)).reshape(-1, 1)
    db = ds.sum(axis=0)
    dP += ds * p.w.T
    return {"w": dw, "b": db}, dP


# --------------------------------------------------------------- conv + relu


def conv_padding(k: int) -> tuple[int, int]:
    """'same' split: extra pad goes to the right for even k."""
    return (k - 1) // 2, k - 1 - (k - 1) // 2


def conv1d_relu_forward(p: Conv1DParams, X: np.ndarray):
    B, T, d_in = X.shape
    k, d_k, F = p.kernels.shape
    if d_k != d_in:
        raise ValueError(f"conv channel mismatch: kernels expect {d_k}, input {d_in}")
    pl, pr = conv_padding(k)
    Xp = np.pad(X, ((0, 0), (pl, pr), (0, 0)))
    z = np.broadcast_to(p.bias, (B, T, F)).astype(X.dtype).copy()
    for j in range(k):
        z += Xp[:, j : j + T, :] @ p.kernels[j]
    return np.maximum(z, 0.0), (p, Xp, z, (B, T, d_in))


def conv1d_relu_backward(cache, dout: np.ndarray):
    p, Xp, z, (B, T, d_in) = cache
    k = p.kernels.shape[0]
    pl, _ = conv_padding(k)
    dz = dout * (z > 0.0)
    g = {"kernels": np.zeros_like(p.kernels), "bias": dz.sum(axis=(0, 1))}
    dXp = np.zeros_like(Xp)
    for j in range(k):
        window = Xp[:, j : j + T, :]
        g["kernels"][j] = np.einsum("btc,btf->cf", window, dz)
        dXp[:, j : j + T, :] += dz @ p.kernels[j].T
    return g, dXp[:, pl : pl + T, :]


# ------------------------------------------------------------------ maxpool


def maxpool1d_forward(X: np.ndarray, size: int):
    B, T, F = X.shape
    if size < 1:
        raise ValueError("pool size must be >= 1")
    if T < size:
        raise ValueError("sequence too short to pool")
    Tp = T // size
    win = X[:, : Tp * size, :].reshape(B, Tp, size, F)
    arg = win.argmax(axis=2)  # first max on ties
    out = np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, ((B, T, F), size, arg, X.dtype)


def maxpool1d_backward(cache, dout: np.ndarray) -> np.ndarray:
    (B, T, F), size, arg, dtype = cache
    Tp = T // size
    dwin = np.zeros((B, Tp, size, F), dtype=dtype)
    np.put_along_axis(dwin, arg[:, :, None, :], dout[:, :, None, :].astype(dtype), axis=2)
    dX = np.zeros((B, T, F), dtype=dtype)
    dX[:, : Tp * size, :] = dwin.reshape(B, Tp * size, F)
    return dX


# ------------------------------------------------------------------ flatten


def flatten_forward(X: np.ndarray):
    B = X.shape[0]
    return X.reshape(B, -1), X.shape


def flatten_backward(cache, dout: np.ndarray) -> np.ndarray:
    return dout.reshape(cache)


# ------------------------------------------------------------ dense softmax


def softmax(z: np.ndarray) -> np.ndarray:
    ex = np.exp(z - z.max(axis=-1, keepdims=True))
    return ex / ex.sum(axis=-1, keepdims=True)


def dense_softmax_forward(p: DenseParams, v: np.ndarray):
    if v.shape[1] != p.W.shape[0]:
        raise ValueError(f"dense input dim mismatch: W expects {p.W.shape[0]}, got {v.shape[1]}")
    probs = softmax(v @ p.W + p.b)
    return probs, (p, v, probs)


def softmax_backward(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """dlogits from dprobs through the softmax Jacobian (per row)."""
    return probs * (dprobs - (probs * dprobs).sum(axis=-1, keepdims=True))


def dense_softmax_backward(cache, dprobs: np.ndarray | None = None,
                           dlogits: np.ndarray | None = None):
    """Backward from either dprobs (general) or dlogits (fused loss path)."""
    p, v, probs = cache
    if (dprobs is None) == (dlogits is None):
        raise ValueError("pass exactly one of dprobs, dlogits")
    if dlogits is None:
        dlogits = softmax_backward(probs, dprobs)
    g = {"W": v.T @ dlogits, "b": dlogits.sum(axis=0)}
    return g, dlogits @ p.W.T
